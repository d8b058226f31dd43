"""Run configuration: one flat set of keys shared by config files and CLI flags."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .assertions.llm import EndpointConfig
from .ranking import DEFAULT_WEIGHTS, FilterConfig, RankConfig


class ConfigError(ValueError):
    pass


def _coerce(key: str, type_str: str, value):
    """Convert a loaded value to the field's declared type.

    YAML 1.1 reads ``1e-09`` as a string, so numbers may arrive as text.
    """
    if value is None:
        if "None" in type_str:
            return None
        raise ConfigError(f"{key} must not be null")
    try:
        if type_str.startswith("list"):
            if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                raise TypeError
            item = float if "float" in type_str else str
            return [item(v) for v in value]
        if "bool" in type_str:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if "int" in type_str:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        if "float" in type_str:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {type_str}, got {value!r}") from None


@dataclass
class RunConfig:
    sources: list[str] = field(default_factory=list)
    top: str = "auto"
    output_dir: str = "keysig_out"
    # ranking
    k: int = 3
    weights: list[float] = field(default_factory=lambda: list(DEFAULT_WEIGHTS))
    alpha: float = 0.85
    lam: float = 0.5
    theta: float = 0.4
    tol: float = 1e-9
    max_iter: int = 200
    count_temporal: bool = False
    literal_obs: bool = False
    clock_patterns: list[str] = field(default_factory=lambda: list(FilterConfig.clock_patterns))
    reset_patterns: list[str] = field(default_factory=lambda: list(FilterConfig.reset_patterns))
    drop_parameters: bool = True
    drop_self_loops: bool = True
    drop_sensitivity_only: bool = True
    # slicing
    depth_limit: int | None = None
    node_cap: int = 500
    # generation
    generate: bool = False
    overview: str | None = None
    template: str | None = None
    max_attempts: int = 3
    feedback: bool = False
    parallelism: int = 1
    prompt_token_budget: int | None = None
    verifier_command: str | None = None
    # endpoint
    base_url: str = EndpointConfig.base_url
    model: str = EndpointConfig.model
    api_key_env: str = EndpointConfig.api_key_env
    timeout: float = EndpointConfig.timeout
    temperature: float = EndpointConfig.temperature
    max_output_tokens: int | None = None
    transport_retries: int = EndpointConfig.transport_retries
    run_token_budget: int | None = None
    mock_dir: str | None = None

    def validate(self) -> "RunConfig":
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ConfigError("weights must be four non-negative numbers")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1, got {sum(self.weights)}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 <= self.lam <= 1:
            raise ConfigError("lam must lie in [0, 1]")
        if not 0 <= self.theta <= 1:
            raise ConfigError("theta must lie in [0, 1]")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("tol must be positive and max_iter at least 1")
        if self.depth_limit is not None and self.depth_limit < 0:
            raise ConfigError("depth_limit must be non-negative")
        if self.node_cap < 1:
            raise ConfigError("node_cap must be at least 1")
        if self.max_attempts < 1 or self.parallelism < 1 or self.transport_retries < 0:
            raise ConfigError("max_attempts and parallelism must be >= 1, transport_retries >= 0")
        for key in ("prompt_token_budget", "run_token_budget", "max_output_tokens"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ConfigError(f"{key} must be positive")
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        aliases = {"lambda": "lam"}
        clean = {}
        for key, value in data.items():
            key = aliases.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            clean[key] = value
        types = {f.name: str(f.type) for f in fields(cls)}
        return cls(**{k: _coerce(k, types[k], v) for k, v in clean.items()})

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """Read a YAML or JSON mapping of configuration keys."""
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a key-value mapping")
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def filter_config(self) -> FilterConfig:
        return FilterConfig(
            tuple(self.clock_patterns),
            tuple(self.reset_patterns),
            self.drop_parameters,
            self.drop_self_loops,
            self.drop_sensitivity_only,
        )

    def rank_config(self) -> RankConfig:
        return RankConfig(
            k=self.k,
            weights=tuple(self.weights),  # type: ignore[arg-type]
            alpha=self.alpha,
            lam=self.lam,
            theta=self.theta,
            tol=self.tol,
            max_iter=self.max_iter,
            count_temporal=self.count_temporal,
            literal_obs=self.literal_obs,
            filter=self.filter_config(),
        )

    def endpoint_config(self) -> EndpointConfig:
        return EndpointConfig(
            base_url=self.base_url,
            model=self.model,
            api_key_env=self.api_key_env,
            timeout=self.timeout,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            transport_retries=self.transport_retries,
            run_token_budget=self.run_token_budget,
            mock_dir=self.mock_dir,
        )
