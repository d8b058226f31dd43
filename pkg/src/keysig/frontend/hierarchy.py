"""Module hierarchy and identifier resolution."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import ast as A
from .source import AmbiguousTop, CyclicInstantiation, Diagnostic, UnresolvedModule

AUTO = "auto"


@dataclass(frozen=True)
class Hierarchy:
    top: str
    # parent module -> ((instance name, child module), ...)
    children: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)

    def edges(self) -> list[tuple[str, str, str]]:
        return [(p, inst, c) for p in sorted(self.children) for inst, c in self.children[p]]

    def paths(self) -> dict[str, tuple[str, ...]]:
        """Shortest module path from the top to every reachable module.

        Breadth-first with children visited in declaration order, so the
        result is deterministic when a module is instantiated more than once.
        """
        out = {self.top: (self.top,)}
        queue = deque([self.top])
        while queue:
            mod = queue.popleft()
            for _, child in self.children.get(mod, ()):
                if child not in out:
                    out[child] = out[mod] + (child,)
                    queue.append(child)
        return out

    def chain(self, module: str) -> str:
        """Dotted instantiation chain ``top.mid...module``."""
        return ".".join(self.paths().get(module, (module,)))

    def depth(self, module: str) -> int:
        return len(self.paths().get(module, ())) - 1


def resolve_hierarchy(ast: A.Ast, top: str = AUTO) -> Hierarchy:
    known = {m.name for m in ast.modules}
    children: dict[str, tuple[tuple[str, str], ...]] = {}
    instantiated: set[str] = set()
    for m in ast.modules:
        kids = []
        for inst in m.instances():
            if inst.module not in known:
                msg = f"module {inst.module!r} (instance {inst.name!r}) is not defined"
                raise UnresolvedModule(str(Diagnostic.at(inst.span, msg)))
            kids.append((inst.name, inst.module))
            instantiated.add(inst.module)
        if kids:
            children[m.name] = tuple(kids)

    _check_acyclic(children)

    if top == AUTO:
        roots = sorted(known - instantiated)
        if len(roots) > 1:
            raise AmbiguousTop(f"several candidate top modules: {', '.join(roots)}")
        if not roots:
            raise CyclicInstantiation("every module is instantiated by another one")
        top = roots[0]
    elif top not in known:
        raise UnresolvedModule(f"top module {top!r} is not defined")

    reachable = {top}
    queue = deque([top])
    while queue:
        for _, c in children.get(queue.popleft(), ()):
            if c not in reachable:
                reachable.add(c)
                queue.append(c)
    return Hierarchy(top, {p: k for p, k in children.items() if p in reachable})


def _check_acyclic(children: dict[str, tuple[tuple[str, str], ...]]) -> None:
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]) -> None:
        state[node] = 1
        for _, c in children.get(node, ()):
            if state.get(c) == 1:
                cycle = trail[trail.index(c):] + [c] if c in trail else [node, c]
                raise CyclicInstantiation("cyclic instantiation: " + " -> ".join(cycle))
            if c not in state:
                visit(c, trail + [c])
        state[node] = 2

    for n in sorted(children):
        if n not in state:
            visit(n, [n])


def unresolved_references(module: A.ModuleDecl) -> list[tuple[A.Ident, Diagnostic]]:
    """Identifier references in ``module`` with no matching declaration."""
    declared = module.declared_names()
    bad: list[tuple[A.Ident, Diagnostic]] = []

    def check(e: A.Expr | None) -> None:
        for ident in A.expr_idents(e):
            if ident.name not in declared:
                bad.append((ident, Diagnostic.at(ident.span, f"unresolved identifier '{ident.name}' in module {module.name}")))

    for item in module.items:
        for ident_expr in item_exprs(item):
            check(ident_expr)
    for p in module.params:
        for _, v in p.assigns:
            check(v)
    return bad


def item_exprs(item: A.Item) -> list[A.Expr]:
    if isinstance(item, A.ContAssign):
        return [e for pair in item.assigns for e in pair]
    if isinstance(item, A.NetDecl):
        return [e for _, e in item.inits]
    if isinstance(item, A.ParamDecl):
        return [e for _, e in item.assigns]
    if isinstance(item, A.Instance):
        return [c.expr for c in item.params + item.conns if c.expr is not None]
    if isinstance(item, A.Always):
        exprs = [s.expr for s in item.sensitivity]
        for st in A.walk_stmt(item.body):
            exprs.extend(_stmt_exprs(st))
        return exprs
    return []


def _stmt_exprs(s: A.Stmt) -> list[A.Expr]:
    if isinstance(s, A.ProcAssign):
        return [s.lhs, s.rhs]
    if isinstance(s, A.If):
        return [s.cond]
    if isinstance(s, A.Case):
        return A.condition_exprs(s)
    if isinstance(s, A.For):
        return A.condition_exprs(s)
    if isinstance(s, A.SysTask):
        return list(s.args)
    return []


def check_references(ast: A.Ast) -> list[Diagnostic]:
    return [d for m in ast.modules for _, d in unresolved_references(m)]
