"""Tokenizer for the supported Verilog subset (also reused by the SVA lint)."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .source import SourceFile, Span, UnsupportedConstruct, VerilogSyntaxError


class Tok(enum.Enum):
    IDENT = "identifier"
    KEYWORD = "keyword"
    NUMBER = "number"
    STRING = "string"
    SYSID = "system identifier"
    OP = "operator"
    EOF = "end of file"


KEYWORDS = frozenset(
    """
    module endmodule macromodule input output inout wire reg integer tri wand wor
    supply0 supply1 signed parameter localparam assign always initial begin end
    if else case casex casez endcase default for while repeat forever posedge
    negedge or generate endgenerate genvar function endfunction task endtask
    interface endinterface specify endspecify primitive endprimitive fork join
    wait disable deassign force release real realtime time event defparam
    and nand nor not xor xnor buf bufif0 bufif1 notif0 notif1
    """.split()
)

_VERILOG_OPS = [
    "<<<", ">>>", "===", "!==",
    "<=", ">=", "==", "!=", "&&", "||", "**", "<<", ">>", "~&", "~|", "~^", "^~",
    "+:", "-:",
    "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "?", ":", ";",
    ",", ".", "(", ")", "[", "]", "{", "}", "@", "#", "=", "$",
]
_SVA_OPS = ["|->", "|=>", "##", "[*", "[=", "[->"]


def _op_regex(ops: list[str]) -> re.Pattern[str]:
    ordered = sorted(ops, key=len, reverse=True)
    return re.compile("|".join(re.escape(o) for o in ordered))


_OPS = _op_regex(_VERILOG_OPS)
_OPS_SVA = _op_regex(_VERILOG_OPS + _SVA_OPS)

_WS = re.compile(r"(?:\s+|//[^\n]*|/\*.*?\*/)+", re.S)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_ESCAPED = re.compile(r"\\\S+")
_SYSID = re.compile(r"\$[A-Za-z_][A-Za-z0-9_$]*")
_NUMBER = re.compile(
    r"(?:\d[\d_]*)?'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+"
    r"|\d[\d_]*\.\d[\d_]*(?:[eE][+-]?\d+)?"
    r"|\d[\d_]*"
)
_STRING = re.compile(r'"(?:[^"\\\n]|\\.)*"')
_DIRECTIVE = re.compile(r"`([A-Za-z_][A-Za-z0-9_]*)")


@dataclass(frozen=True)
class Token:
    kind: Tok
    value: str
    span: Span

    def is_op(self, *values: str) -> bool:
        return self.kind is Tok.OP and self.value in values

    def is_kw(self, *values: str) -> bool:
        return self.kind is Tok.KEYWORD and self.value in values


Loader = Callable[[str], SourceFile]


def tokenize(
    source: SourceFile,
    *,
    sva: bool = False,
    loader: Loader | None = None,
    loaded: list[SourceFile] | None = None,
    _stack: tuple[str, ...] = (),
) -> list[Token]:
    """Split ``source`` into tokens, splicing in `` `include`` files.

    The trailing EOF token is only emitted for the outermost file. Included
    files are appended to ``loaded`` when given.
    """
    text = source.text
    ops = _OPS_SVA if sva else _OPS
    load = loader or _default_loader(source)
    out: list[Token] = []
    pos, n = 0, len(text)
    stack = _stack + (str(Path(source.path).resolve()),)

    def tok(kind: Tok, end: int) -> None:
        out.append(Token(kind, text[pos:end], source.span(pos, end)))

    while pos < n:
        m = _WS.match(text, pos)
        if m:
            pos = m.end()
            continue
        if text.startswith("/*", pos):
            raise VerilogSyntaxError.at(source.span(pos, pos + 2), "unterminated block comment")
        ch = text[pos]
        if ch == "`":
            m = _DIRECTIVE.match(text, pos)
            if not m:
                raise VerilogSyntaxError.at(source.span(pos, pos + 1), "stray backtick")
            if m.group(1) != "include":
                raise UnsupportedConstruct.at(
                    source.span(pos, m.end()), f"compiler directive `{m.group(1)} is not supported"
                )
            sm = _WS.match(text, m.end())
            spos = sm.end() if sm else m.end()
            sm = _STRING.match(text, spos)
            if not sm:
                raise VerilogSyntaxError.at(source.span(pos, m.end()), "`include expects a quoted file name")
            name = sm.group(0)[1:-1]
            try:
                inc = load(name)
            except (OSError, ValueError) as exc:
                raise VerilogSyntaxError.at(
                    source.span(pos, sm.end()), f"cannot read `include file {name}: {exc}"
                ) from None
            key = str(Path(inc.path).resolve())
            if key in stack:
                raise VerilogSyntaxError.at(source.span(pos, sm.end()), f"recursive `include of {name}")
            if loaded is not None:
                loaded.append(inc)
            out.extend(tokenize(inc, sva=sva, loader=_default_loader(inc), loaded=loaded, _stack=stack))
            pos = sm.end()
            continue
        if ch == "\\":
            m = _ESCAPED.match(text, pos)
            tok(Tok.IDENT, m.end())
            pos = m.end()
            continue
        m = _IDENT.match(text, pos)
        if m:
            word = m.group(0)
            tok(Tok.KEYWORD if word in KEYWORDS else Tok.IDENT, m.end())
            pos = m.end()
            continue
        if ch == "$":
            m = _SYSID.match(text, pos)
            if m:
                tok(Tok.SYSID, m.end())
                pos = m.end()
                continue
        m = _NUMBER.match(text, pos)
        if m and (ch.isdigit() or ch == "'"):
            tok(Tok.NUMBER, m.end())
            pos = m.end()
            continue
        if ch == '"':
            m = _STRING.match(text, pos)
            if not m:
                raise VerilogSyntaxError.at(source.span(pos, pos + 1), "unterminated string literal")
            tok(Tok.STRING, m.end())
            pos = m.end()
            continue
        m = ops.match(text, pos)
        if m:
            tok(Tok.OP, m.end())
            pos = m.end()
            continue
        raise VerilogSyntaxError.at(source.span(pos, pos + 1), f"unexpected character {ch!r}")

    if not _stack:
        line, col = source.location(n)
        out.append(Token(Tok.EOF, "", Span(source.path, n, n, line, col)))
    return out


def _default_loader(source: SourceFile) -> Loader:
    base = Path(source.path).parent

    def load(name: str) -> SourceFile:
        return SourceFile.load(base / name)

    return load
