"""Prompt rendering for targeted assertion generation."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..slicing import RtlSlice, estimate_tokens

REQUIRED_PLACEHOLDERS = frozenset({"signal", "class", "chain", "overview", "slice"})
OPTIONAL_PLACEHOLDERS = frozenset({"module", "instruction"})
_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

NO_SPEC = (
    "No specification provided. Infer the intended behaviour from the RTL "
    "slice and the signal names only."
)
TRUNCATION_MARKER = "// [TruncatedSlice]"

CLASS_INSTRUCTIONS = {
    "StateRegister": (
        "The target is a state register. Check its reset value, every condition "
        "under which it is updated and the value it takes, and that it holds its "
        "value when no update condition is active."
    ),
    "ControlSignal": (
        "The target is a control signal. Check how each of its values steers the "
        "logic it guards, covering every branch it selects."
    ),
    "OutputPort": (
        "The target is a module output. Check its externally observable behaviour "
        "in terms of the inputs and internal state that drive it."
    ),
    "InternalSignal": (
        "The target is an internal signal. Check the functional relationship "
        "between it and the signals that drive it."
    ),
}
COMBINATIONAL_NOTE = (
    " The target is purely combinational, so relations sampled on a clock edge "
    "of the enclosing design are sufficient."
)
SEQUENTIAL_NOTE = " Every assertion must name its clocking event, e.g. @(posedge clk)."


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    id: str
    text: str

    def __post_init__(self) -> None:
        found = set(_PLACEHOLDER.findall(self.text))
        unknown = found - REQUIRED_PLACEHOLDERS - OPTIONAL_PLACEHOLDERS
        if unknown:
            raise TemplateError(f"template {self.id!r} has unknown placeholders: {sorted(unknown)}")
        missing = REQUIRED_PLACEHOLDERS - found
        if missing:
            raise TemplateError(f"template {self.id!r} is missing placeholders: {sorted(missing)}")

    @classmethod
    def load(cls, path: str | Path) -> "Template":
        p = Path(path)
        return cls(p.stem, p.read_text())

    def render(self, values: dict[str, str]) -> str:
        # single pass, so braces inside substituted RTL are left alone
        return _PLACEHOLDER.sub(lambda m: values[m.group(1)], self.text)


def default_template() -> Template:
    text = resources.files("keysig.assertions").joinpath("templates/default.txt").read_text()
    return Template("default", text)


@dataclass(frozen=True)
class PromptBundle:
    signal: str
    cls: str
    module: str
    overview: str
    slice_text: str
    chain: str
    template_id: str
    rendered: str
    token_estimate: int
    truncated: bool = False

    @property
    def prompt_hash(self) -> str:
        return hashlib.sha256(self.rendered.encode()).hexdigest()


def build_prompt(
    slice: RtlSlice,
    overview: str | None,
    template: Template | None = None,
    *,
    token_budget: int | None = None,
    feedback: str | None = None,
) -> PromptBundle:
    """Render the prompt for one slice.

    When ``token_budget`` is exceeded, trailing slice lines are dropped and a
    truncation marker is inserted in their place.
    """
    template = template or default_template()
    overview_text = overview.strip() if overview and overview.strip() else NO_SPEC
    instruction = CLASS_INSTRUCTIONS.get(slice.root_class, CLASS_INSTRUCTIONS["InternalSignal"])
    instruction += COMBINATIONAL_NOTE if slice.root_combinational else SEQUENTIAL_NOTE
    if feedback:
        instruction += (
            "\n\nA previous answer for this signal was rejected for the following "
            f"reason(s):\n{feedback}\nAvoid repeating these problems."
        )

    def render(slice_text: str) -> str:
        return template.render(
            {
                "signal": slice.root_name,
                "class": slice.root_class or "InternalSignal",
                "chain": slice.chain,
                "overview": overview_text,
                "slice": slice_text.rstrip("\n"),
                "module": slice.root_module,
                "instruction": instruction,
            }
        )

    slice_text = slice.text
    rendered = render(slice_text)
    truncated = False
    if token_budget is not None and estimate_tokens(rendered) > token_budget:
        lines = slice_text.rstrip("\n").split("\n")
        while lines:
            lines.pop()
            omitted = slice_text.rstrip("\n").count("\n") + 1 - len(lines)
            candidate = "\n".join(lines + [f"{TRUNCATION_MARKER} {omitted} line(s) omitted to fit the token budget"])
            rendered = render(candidate)
            if estimate_tokens(rendered) <= token_budget:
                break
        slice_text = candidate
        truncated = True

    return PromptBundle(
        signal=slice.root,
        cls=slice.root_class,
        module=slice.root_module,
        overview=overview_text,
        slice_text=slice_text,
        chain=slice.chain,
        template_id=template.id,
        rendered=rendered,
        token_estimate=estimate_tokens(rendered),
        truncated=truncated,
    )


def load_overview(path: str | Path | None) -> str | None:
    if path is None:
        return None
    return Path(path).read_text(encoding="utf-8", errors="replace").strip() or None
