"""Chat-completion transport, offline mock and the run-level token tally."""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from ..slicing import estimate_tokens, safe_name
from .prompt import PromptBundle


class LLMError(Exception):
    pass


class TransportError(LLMError):
    """Network failure or non-auth HTTP error; retried without using an attempt."""


class AuthError(LLMError):
    pass


class BudgetExceeded(LLMError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    api_key_env: str = "KEYSIG_API_KEY"
    timeout: float = 120.0
    temperature: float = 0.2
    max_output_tokens: int | None = None
    transport_retries: int = 2
    run_token_budget: int | None = None
    mock_dir: str | None = None


@dataclass(frozen=True)
class LLMResponse:
    text: str
    input_tokens: int
    output_tokens: int


class ChatClient(Protocol):
    def complete(self, bundle: PromptBundle, attempt: int) -> LLMResponse: ...


@dataclass
class TokenLedger:
    """Thread-safe tally of tokens spent during one run."""

    budget: int | None = None
    requests: list[tuple[str, int, int]] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def input_tokens(self) -> int:
        return sum(r[1] for r in self.requests)

    @property
    def output_tokens(self) -> int:
        return sum(r[2] for r in self.requests)

    def check(self, estimate: int) -> None:
        with self._lock:
            if self.budget is not None and self.input_tokens + estimate > self.budget:
                raise BudgetExceeded(
                    f"prompt of ~{estimate} tokens would exceed the run budget "
                    f"({self.input_tokens}/{self.budget} used)"
                )

    def record(self, signal: str, response: LLMResponse) -> None:
        with self._lock:
            self.requests.append((signal, response.input_tokens, response.output_tokens))


class HttpChatClient:
    """POSTs to ``{base_url}/chat/completions`` with a bearer token from the environment."""

    def __init__(self, cfg: EndpointConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self._client = httpx.Client(timeout=cfg.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def complete(self, bundle: PromptBundle, attempt: int) -> LLMResponse:
        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.cfg.api_key_env} is not set")
        payload: dict = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": bundle.rendered}],
            "temperature": self.cfg.temperature,
        }
        if self.cfg.max_output_tokens:
            payload["max_tokens"] = self.cfg.max_output_tokens
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self._client.post(url, json=payload, headers={"Authorization": f"Bearer {key}"})
        except httpx.HTTPError as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code >= 400:
            raise TransportError(f"endpoint returned HTTP {resp.status_code}")
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat-completion response: {exc}") from exc
        usage = data.get("usage") or {}
        return LLMResponse(
            text,
            int(usage.get("prompt_tokens", bundle.token_estimate)),
            int(usage.get("completion_tokens", estimate_tokens(text))),
        )


class MockChatClient:
    """Replays scripted responses from a directory, fully offline.

    For target ``mod.sig`` at attempt ``n`` the first existing file wins::

        <dir>/mod.sig/<n>.txt   <dir>/mod.sig.txt   <dir>/default/<n>.txt   <dir>/default.txt

    A missing script yields an empty response.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def complete(self, bundle: PromptBundle, attempt: int) -> LLMResponse:
        name = safe_name(bundle.signal)
        d = self.directory
        for candidate in (d / name / f"{attempt}.txt", d / f"{name}.txt", d / "default" / f"{attempt}.txt", d / "default.txt"):
            if candidate.is_file():
                text = candidate.read_text()
                break
        else:
            text = ""
        return LLMResponse(text, bundle.token_estimate, estimate_tokens(text))


def make_client(cfg: EndpointConfig) -> ChatClient:
    if cfg.mock_dir:
        return MockChatClient(cfg.mock_dir)
    return HttpChatClient(cfg)


def request_assertions(
    bundle: PromptBundle,
    client: ChatClient,
    ledger: TokenLedger | None = None,
    attempt: int = 1,
) -> LLMResponse:
    """Send one prompt, enforcing the run budget before the call."""
    if ledger is not None:
        ledger.check(bundle.token_estimate)
    response = client.complete(bundle, attempt)
    if ledger is not None:
        ledger.record(bundle.signal, response)
    return response
