"""AST node types.

Every node is a frozen dataclass; spans are excluded from equality so that a
statement re-parsed from its own source slice compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .source import SourceFile, Span


def _span() -> Span:
    return field(default=None, compare=False, repr=False)  # type: ignore[return-value]


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Number:
    text: str
    span: Span = _span()


@dataclass(frozen=True)
class String:
    text: str
    span: Span = _span()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class PartSelect:
    base: "Expr"
    msb: "Expr"
    lsb: "Expr"
    mode: str = ":"  # ":", "+:" or "-:"
    span: Span = _span()


@dataclass(frozen=True)
class Concat:
    items: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Repeat:
    count: "Expr"
    items: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Ternary:
    cond: "Expr"
    then: "Expr"
    other: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class SysCall:
    name: str
    args: tuple["Expr", ...]
    span: Span = _span()


Expr = Union[Ident, Number, String, Index, PartSelect, Concat, Repeat, Unary, Binary, Ternary, SysCall]


def walk_expr(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Index):
        yield from walk_expr(e.base)
        yield from walk_expr(e.index)
    elif isinstance(e, PartSelect):
        yield from walk_expr(e.base)
        yield from walk_expr(e.msb)
        yield from walk_expr(e.lsb)
    elif isinstance(e, (Concat, Repeat)):
        if isinstance(e, Repeat):
            yield from walk_expr(e.count)
        for item in e.items:
            yield from walk_expr(item)
    elif isinstance(e, Unary):
        yield from walk_expr(e.operand)
    elif isinstance(e, Binary):
        yield from walk_expr(e.lhs)
        yield from walk_expr(e.rhs)
    elif isinstance(e, Ternary):
        yield from walk_expr(e.cond)
        yield from walk_expr(e.then)
        yield from walk_expr(e.other)
    elif isinstance(e, SysCall):
        for a in e.args:
            yield from walk_expr(a)


def expr_idents(e: Expr | None) -> list[Ident]:
    """All identifier references in ``e``, in source order."""
    if e is None:
        return []
    return [x for x in walk_expr(e) if isinstance(x, Ident)]


def lvalue_targets(e: Expr) -> list[Ident]:
    """Identifiers written by an assignment to ``e`` (selects are ignored)."""
    if isinstance(e, Ident):
        return [e]
    if isinstance(e, (Index, PartSelect)):
        return lvalue_targets(e.base)
    if isinstance(e, Concat):
        return [t for item in e.items for t in lvalue_targets(item)]
    return []


def lvalue_index_idents(e: Expr) -> list[Ident]:
    """Identifiers used inside the select expressions of an lvalue."""
    if isinstance(e, Index):
        return lvalue_index_idents(e.base) + expr_idents(e.index)
    if isinstance(e, PartSelect):
        return lvalue_index_idents(e.base) + expr_idents(e.msb) + expr_idents(e.lsb)
    if isinstance(e, Concat):
        return [t for item in e.items for t in lvalue_index_idents(item)]
    return []


# --------------------------------------------------------------------------
# Procedural statements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcAssign:
    lhs: Expr
    rhs: Expr
    nonblocking: bool
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    other: "Stmt | None" = None
    span: Span = _span()


@dataclass(frozen=True)
class CaseItem:
    labels: tuple[Expr, ...]  # empty tuple means ``default``
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Case:
    kind: str  # case / casex / casez
    subject: Expr
    items: tuple[CaseItem, ...]
    span: Span = _span()


@dataclass(frozen=True)
class For:
    init: ProcAssign
    cond: Expr
    step: ProcAssign
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    name: str | None = None
    span: Span = _span()


@dataclass(frozen=True)
class SysTask:
    name: str
    args: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class NullStmt:
    span: Span = _span()


Stmt = Union[ProcAssign, If, Case, For, Block, SysTask, NullStmt]


def child_stmts(s: Stmt) -> list[Stmt]:
    if isinstance(s, If):
        return [s.then] + ([s.other] if s.other is not None else [])
    if isinstance(s, Case):
        return [item.body for item in s.items]
    if isinstance(s, For):
        return [s.body]
    if isinstance(s, Block):
        return list(s.stmts)
    return []


def walk_stmt(s: Stmt) -> Iterator[Stmt]:
    yield s
    for c in child_stmts(s):
        yield from walk_stmt(c)


def condition_exprs(s: Stmt) -> list[Expr]:
    """Condition expressions guarding the body of an if/case/for."""
    if isinstance(s, If):
        return [s.cond]
    if isinstance(s, Case):
        return [s.subject] + [lab for item in s.items for lab in item.labels]
    if isinstance(s, For):
        return [s.init.lhs, s.init.rhs, s.cond, s.step.lhs, s.step.rhs]
    return []


# --------------------------------------------------------------------------
# Module items
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Port:
    """A module port after ANSI / non-ANSI declarations have been merged."""

    name: str
    direction: str  # input / output / inout
    net_type: str | None = None
    width: str | None = None
    span: Span = _span()


@dataclass(frozen=True)
class PortDecl:
    direction: str
    net_type: str | None
    signed: bool
    width: str | None
    names: tuple[str, ...]
    span: Span = _span()


@dataclass(frozen=True)
class NetDecl:
    kind: str  # wire / reg / integer / tri ...
    signed: bool
    width: str | None
    names: tuple[str, ...]
    inits: tuple[tuple[str, Expr], ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class ParamDecl:
    kind: str  # parameter / localparam
    width: str | None
    assigns: tuple[tuple[str, Expr], ...]
    span: Span = _span()


@dataclass(frozen=True)
class ContAssign:
    assigns: tuple[tuple[Expr, Expr], ...]
    span: Span = _span()


@dataclass(frozen=True)
class SensItem:
    edge: str | None  # posedge / negedge / None
    expr: Expr


@dataclass(frozen=True)
class Always:
    star: bool
    sensitivity: tuple[SensItem, ...]
    body: Stmt
    span: Span = _span()

    @property
    def edge_triggered(self) -> bool:
        return any(item.edge is not None for item in self.sensitivity)


@dataclass(frozen=True)
class PortConn:
    port: str | None  # None for positional bindings
    expr: Expr | None
    span: Span = _span()


@dataclass(frozen=True)
class Instance:
    module: str
    name: str
    params: tuple[PortConn, ...]
    conns: tuple[PortConn, ...]
    span: Span = _span()


Item = Union[PortDecl, NetDecl, ParamDecl, ContAssign, Always, Instance]


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    ports: tuple[Port, ...]
    params: tuple[ParamDecl, ...]
    items: tuple[Item, ...]
    ansi: bool
    span: Span = _span()
    header_span: Span = _span()

    def port(self, name: str) -> Port | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def declared_names(self) -> dict[str, str]:
        """Map every declared identifier to ``port``, ``net`` or ``parameter``."""
        names: dict[str, str] = {}
        for p in self.params:
            for n, _ in p.assigns:
                names[n] = "parameter"
        for item in self.items:
            if isinstance(item, ParamDecl):
                for n, _ in item.assigns:
                    names[n] = "parameter"
            elif isinstance(item, NetDecl):
                for n in item.names:
                    names.setdefault(n, "net")
        for p in self.ports:
            names[p.name] = "port"
        return names

    def instances(self) -> list[Instance]:
        return [i for i in self.items if isinstance(i, Instance)]


@dataclass(frozen=True)
class Ast:
    modules: tuple[ModuleDecl, ...]
    sources: tuple[SourceFile, ...] = field(default=(), compare=False, repr=False)

    def module(self, name: str) -> ModuleDecl | None:
        for m in self.modules:
            if m.name == name:
                return m
        return None

    def source(self, path: str) -> SourceFile:
        for s in self.sources:
            if s.path == path:
                return s
        raise KeyError(path)
