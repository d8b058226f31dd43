"""Assertion extraction from model responses and a structural SVA lint.

The lint accepts a small concurrent-assertion subset::

    [label :] assert property ( [@(edge clk)] [disable iff (expr)] prop ) [action] ;

    prop  := 'not' prop | seq [('|->' | '|=>') prop] {('and' | 'or') prop}
    seq   := ['##' delay] item {'##' delay item}
    item  := expr ['[*' n[:m] ']' | '[=' ... ']' | '[->' ... ']'] | '(' prop ')'
    delay := number | '[' number ':' (number | '$') ']'

Expressions are ordinary Verilog expressions plus dotted hierarchical names
and the usual sampled-value functions ($past, $rose, ...).
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Iterable

from ..frontend import ast as A
from ..frontend.lexer import Tok, tokenize
from ..frontend.parser import Parser
from ..frontend.source import FrontendError, SourceFile
from ..slicing import RtlSlice

ALLOWED_SYSTEM_FUNCTIONS = frozenset(
    {
        "$past", "$rose", "$fell", "$stable", "$changed", "$onehot", "$onehot0",
        "$isunknown", "$countones", "$signed", "$unsigned", "$clog2", "$bits",
        "$sampled",
    }
)
ACTION_TASKS = frozenset({"$error", "$display", "$fatal", "$warning", "$info"})

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
# a label only counts at the start of a line, so prose like "try this: assert ..." is not one
_ASSERT_START = re.compile(r"(?:^[ \t]*[A-Za-z_][A-Za-z0-9_]*[ \t]*:[ \t]*)?\bassert\s+property\b", re.M)
_PROPERTY_DEF = re.compile(
    r"\bproperty\s+([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(\s*\))?\s*;(.*?)\bendproperty\b", re.S
)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reason: str | None = None

    def __str__(self) -> str:
        return "LintPass" if self.passed else f"LintFail({self.reason})"

    def to_dict(self) -> dict:
        return {"passed": self.passed, "reason": self.reason}


LINT_PASS = Verdict(True)


class LintError(Exception):
    pass


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------


def _statement_end(text: str, start: int) -> int | None:
    depth = 0
    i = start
    in_str = False
    while i < len(text):
        ch = text[i]
        if in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == ";" and depth <= 0:
            return i + 1
        i += 1
    return None


def _inline_named_properties(stmt: str, props: dict[str, str]) -> str:
    m = re.search(r"\bproperty\s*\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\)", stmt)
    if m and m.group(1) in props:
        body = props[m.group(1)].strip().rstrip(";").strip()
        return stmt[: m.start()] + f"property ({body})" + stmt[m.end():]
    return stmt


def extract_assertions(response: str) -> list[str]:
    """Pull ``assert property`` statements out of a model response.

    Fenced code blocks are searched first; if there are none the whole
    response is scanned. Named ``property ... endproperty`` definitions are
    inlined into the assertions that reference them.
    """
    blocks = _FENCE.findall(response)
    regions = blocks if blocks else [response]
    out = []
    for region in regions:
        props = {m.group(1): m.group(2) for m in _PROPERTY_DEF.finditer(region)}
        scrubbed = _PROPERTY_DEF.sub(lambda m: " " * len(m.group(0)), region)
        for m in _ASSERT_START.finditer(scrubbed):
            end = _statement_end(scrubbed, m.end())
            if end is None:
                stmt = scrubbed[m.start():].strip()
            else:
                stmt = scrubbed[m.start():end].strip()
            out.append(_inline_named_properties(" ".join(stmt.split()), props))
    return out


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


@dataclass
class ParsedAssertion:
    label: str | None
    clock_edge: str | None
    clock: A.Expr | None
    disable: A.Expr | None
    exprs: list[A.Expr]


class _SvaParser(Parser):
    def primary(self) -> A.Expr:
        tok = self.cur
        if tok.kind is Tok.IDENT and self.peek().is_op(".") and self.peek(2).kind is Tok.IDENT:
            parts = [self.advance().value]
            while self.cur.is_op(".") and self.peek().kind is Tok.IDENT:
                self.advance()
                parts.append(self.advance().value)
            return self.selects(A.Ident(".".join(parts), tok.span), tok)
        if tok.is_op("$"):
            self.advance()
            return A.Ident("$", tok.span)
        return super().primary()

    def assertion(self) -> ParsedAssertion:
        label = None
        if self.cur.kind is Tok.IDENT and self.peek().is_op(":"):
            label = self.advance().value
            self.advance()
        if not (self.cur.kind is Tok.IDENT and self.cur.value == "assert"):
            raise self.error("expected 'assert'")
        self.advance()
        if not (self.cur.kind is Tok.IDENT and self.cur.value == "property"):
            raise self.error("only concurrent 'assert property' statements are accepted")
        self.advance()
        self.expect_op("(")
        out = ParsedAssertion(label, None, None, None, [])
        if self.accept_op("@"):
            self.expect_op("(")
            if self.cur.is_kw("posedge", "negedge"):
                out.clock_edge = self.advance().value
            out.clock = self.expression()
            self.expect_op(")")
        if self.cur.is_kw("disable"):
            self.advance()
            if not (self.cur.kind is Tok.IDENT and self.cur.value == "iff"):
                raise self.error("expected 'iff'")
            self.advance()
            self.expect_op("(")
            out.disable = self.expression()
            self.expect_op(")")
        self.prop(out.exprs)
        self.expect_op(")")
        self.action()
        self.expect_op(";")
        if self.cur.kind is not Tok.EOF:
            raise self.error("trailing text after assertion")
        return out

    def action(self) -> None:
        if self.cur.kind is Tok.SYSID:
            self.action_task()
        if self.accept_kw("else"):
            if self.cur.kind is Tok.SYSID:
                self.action_task()
            elif self.cur.is_kw("begin"):
                self.advance()
                while not self.cur.is_kw("end"):
                    if self.cur.kind is not Tok.SYSID:
                        raise self.error("only system tasks are allowed in assertion action blocks")
                    self.action_task()
                    self.accept_op(";")
                self.advance()
            else:
                raise self.error("expected an action block after 'else'")

    def action_task(self) -> None:
        tok = self.advance()
        if tok.value not in ACTION_TASKS:
            raise self.error(f"system task {tok.value} is not allowed in an action block", tok)
        if self.accept_op("("):
            depth = 1
            while depth:
                if self.cur.kind is Tok.EOF:
                    raise self.error("unbalanced parentheses in action block")
                t = self.advance()
                depth += t.is_op("(") - t.is_op(")")

    def prop(self, exprs: list[A.Expr]) -> None:
        if self.accept_kw("not"):
            self.prop(exprs)
            return
        self.sequence(exprs)
        if self.cur.is_op("|->", "|=>"):
            self.advance()
            self.prop(exprs)
        while self.cur.is_kw("and", "or"):
            self.advance()
            self.prop(exprs)

    def sequence(self, exprs: list[A.Expr]) -> None:
        if self.cur.is_op("##"):
            self.advance()
            self.delay()
        self.seq_item(exprs)
        while self.cur.is_op("##"):
            self.advance()
            self.delay()
            self.seq_item(exprs)

    def delay(self) -> None:
        if self.cur.kind is Tok.NUMBER:
            self.advance()
            return
        self.expect_op("[")
        self.range_bounds()
        self.expect_op("]")

    def range_bounds(self) -> None:
        if self.cur.kind is not Tok.NUMBER:
            raise self.error("expected a constant cycle count")
        self.advance()
        if self.accept_op(":"):
            if not (self.cur.kind is Tok.NUMBER or self.cur.is_op("$")):
                raise self.error("expected a constant cycle count or '$'")
            self.advance()

    def _ends_seq_item(self) -> bool:
        c = self.cur
        return (
            c.kind is Tok.EOF
            or c.is_op(")", ";", "|->", "|=>", "##", "[*", "[=", "[->")
            or c.is_kw("and", "or")
            or (c.kind is Tok.IDENT and c.value in {"throughout", "within", "intersect", "until"})
        )

    def seq_item(self, exprs: list[A.Expr]) -> None:
        if self.cur.is_op("("):
            # parenthesised sub-property, or an ordinary parenthesised expression
            save = self.pos
            self.advance()
            try:
                inner: list[A.Expr] = []
                self.prop(inner)
                self.expect_op(")")
                if not self._ends_seq_item():
                    # e.g. "(a == b) && c": the parentheses belong to an expression
                    raise self.error("parenthesised operand")
                exprs.extend(inner)
            except FrontendError:
                self.pos = save
                exprs.append(self.expression())
        else:
            if self.cur.kind is Tok.IDENT and self.cur.value in {
                "throughout", "within", "intersect", "until", "s_eventually", "eventually",
                "first_match", "nexttime", "always", "strong", "weak",
            }:
                raise self.unsupported(f"SVA operator '{self.cur.value}'")
            exprs.append(self.expression())
        if self.cur.is_op("[*", "[=", "[->"):
            self.advance()
            self.range_bounds()
            self.expect_op("]")
        if self.cur.kind is Tok.IDENT and self.cur.value in {"throughout", "within", "intersect", "until"}:
            raise self.unsupported(f"SVA operator '{self.cur.value}'")


def parse_assertion(text: str) -> ParsedAssertion:
    try:
        source = SourceFile("<assertion>", text)
        p = _SvaParser(tokenize(source, sva=True), {source.path: source})
        return p.assertion()
    except FrontendError as exc:
        raise LintError(exc.diagnostic.message) from None
    except ValueError as exc:
        raise LintError(str(exc)) from None


# --------------------------------------------------------------------------
# lint
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LintContext:
    """Names an assertion may legally mention."""

    signals: frozenset[str]
    scopes: frozenset[str]
    needs_clock: bool

    @classmethod
    def from_slice(cls, s: RtlSlice) -> "LintContext":
        from ..frontend.parser import parse_text

        names: set[str] = set()
        scopes: set[str] = set(s.chain.split("."))
        for frag in s.fragments:
            try:
                mod = parse_text(frag.text, f"<slice:{frag.module}>").modules[0]
            except FrontendError:
                continue
            names.update(mod.declared_names())
            scopes.update(i.name for i in mod.instances())
            scopes.add(mod.name)
        names.update(q.split(".", 1)[1] for q in s.nodes)
        return cls(frozenset(names), frozenset(scopes), not s.root_combinational)


def _names(exprs: Iterable[A.Expr | None]) -> list[A.Expr]:
    out = []
    for e in exprs:
        if e is not None:
            out.extend(A.walk_expr(e))
    return out


def lint_assertion(text: str, ctx: LintContext) -> Verdict:
    try:
        parsed = parse_assertion(text)
    except LintError as exc:
        return Verdict(False, f"syntax: {exc}")
    if ctx.needs_clock and parsed.clock is None:
        return Verdict(False, "missing clocking event for a sequential target")
    for node in _names([parsed.clock, parsed.disable, *parsed.exprs]):
        if isinstance(node, A.SysCall) and node.name not in ALLOWED_SYSTEM_FUNCTIONS:
            return Verdict(False, f"unsupported system function {node.name}")
        if isinstance(node, A.Ident) and node.name != "$":
            parts = node.name.split(".")
            if parts[-1] not in ctx.signals:
                return Verdict(False, f"unknown signal {node.name}")
            if any(p not in ctx.scopes for p in parts[:-1]):
                return Verdict(False, f"unknown scope in {node.name}")
    return LINT_PASS


@dataclass(frozen=True)
class ExternalVerifier:
    """Shell command deciding correctness: exit code 0 means the assertion holds.

    ``{file}`` in the command is replaced by a temporary file holding the
    assertion and ``{signal}`` by the target's qualified name.
    """

    command: str
    timeout: float = 600.0

    def __call__(self, assertion: str, signal: str) -> Verdict:
        fd, path = tempfile.mkstemp(suffix=".sva")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(assertion + "\n")
            argv = [a.replace("{file}", path).replace("{signal}", signal) for a in shlex.split(self.command)]
            try:
                proc = subprocess.run(argv, capture_output=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                return Verdict(False, f"external verifier failed to run: {exc}")
            if proc.returncode == 0:
                return LINT_PASS
            return Verdict(False, f"external verifier rejected (exit {proc.returncode})")
        finally:
            os.unlink(path)


def extract_and_validate(
    response: str,
    slice: RtlSlice,
    verifier: ExternalVerifier | None = None,
) -> list[tuple[str, Verdict]]:
    ctx = LintContext.from_slice(slice)
    out = []
    for text in extract_assertions(response):
        verdict = lint_assertion(text, ctx)
        if verdict.passed and verifier is not None:
            verdict = verifier(text, slice.root)
        out.append((text, verdict))
    return out
