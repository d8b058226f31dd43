"""Source files, spans and diagnostics shared by the whole frontend."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class Span:
    """Half-open byte range ``[start, end)`` inside one source file."""

    path: str
    start: int
    end: int
    line: int
    col: int

    def text(self, source: "SourceFile") -> str:
        return source.text[self.start:self.end]


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str
    line_starts: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError(f"{self.path}: empty source file")
        if not self.line_starts:
            starts = [0]
            starts.extend(i + 1 for i, ch in enumerate(self.text) if ch == "\n")
            object.__setattr__(self, "line_starts", tuple(starts))

    @classmethod
    def load(cls, path: str | Path) -> "SourceFile":
        raw = Path(path).read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            text = raw.decode("latin-1")
        return cls(str(path), text)

    def location(self, offset: int) -> tuple[int, int]:
        """1-based (line, column) of a byte offset."""
        idx = bisect.bisect_right(self.line_starts, offset) - 1
        return idx + 1, offset - self.line_starts[idx] + 1

    def span(self, start: int, end: int) -> Span:
        line, col = self.location(start)
        return Span(self.path, start, end, line, col)


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    col: int
    severity: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.severity}: {self.message}"

    @classmethod
    def at(cls, span: Span, message: str, severity: str = "error") -> "Diagnostic":
        return cls(span.path, span.line, span.col, severity, message)


class FrontendError(Exception):
    """Base class for errors raised while reading Verilog sources."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic

    @classmethod
    def at(cls, span: Span, message: str) -> "FrontendError":
        return cls(Diagnostic.at(span, message))


class VerilogSyntaxError(FrontendError):
    """Input that is not valid within the supported Verilog subset."""


class UnsupportedConstruct(FrontendError):
    """Recognised Verilog that this frontend deliberately does not handle."""


class HierarchyError(Exception):
    pass


class AmbiguousTop(HierarchyError):
    pass


class CyclicInstantiation(HierarchyError):
    pass


class UnresolvedModule(HierarchyError):
    pass
