"""RTL semantic graph: qualified signals connected by typed dependency edges."""

from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .frontend import ast as A
from .frontend.hierarchy import Hierarchy, unresolved_references
from .frontend.source import Diagnostic, Span

GRAPH_SCHEMA = "keysig-graph/1"


class SignalClass(str, enum.Enum):
    STATE_REGISTER = "StateRegister"
    CONTROL_SIGNAL = "ControlSignal"
    OUTPUT_PORT = "OutputPort"
    INTERNAL_SIGNAL = "InternalSignal"


class EdgeKind(str, enum.Enum):
    DATA = "data"
    TEMPORAL = "temporal"
    CONTROL = "control"
    MODULE = "module"


@dataclass(frozen=True)
class QualifiedSignal:
    module: str
    name: str
    cls: SignalClass
    combinational: bool
    parameter: bool = False
    sensitivity_only: bool = False
    spans: tuple[Span, ...] = field(default=(), compare=False, repr=False)

    @property
    def qualified_name(self) -> str:
        return f"{self.module}.{self.name}"


@dataclass(frozen=True)
class DepEdge:
    src: str
    dst: str
    kind: EdgeKind
    span: Span | None = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)


@dataclass(frozen=True)
class SemanticGraph:
    nodes: dict[str, QualifiedSignal]
    edges: tuple[DepEdge, ...]
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False, repr=False)

    @classmethod
    def build(
        cls,
        nodes: Iterable[QualifiedSignal],
        edges: Iterable[DepEdge],
        diagnostics: Iterable[Diagnostic] = (),
    ) -> "SemanticGraph":
        """Normalise ordering and drop duplicate (src, dst, kind) triples."""
        table = {n.qualified_name: n for n in nodes}
        seen: dict[tuple[str, str, str], DepEdge] = {}
        for e in edges:
            if e.src not in table or e.dst not in table:
                raise ValueError(f"edge {e.src} -> {e.dst} references a missing node")
            seen.setdefault(e.key, e)
        return cls(
            {k: table[k] for k in sorted(table)},
            tuple(seen[k] for k in sorted(seen)),
            tuple(diagnostics),
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, name: object) -> bool:
        return name in self.nodes

    @cached_property
    def out_edges(self) -> dict[str, list[DepEdge]]:
        out: dict[str, list[DepEdge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            out[e.src].append(e)
        return out

    @cached_property
    def in_edges(self) -> dict[str, list[DepEdge]]:
        inc: dict[str, list[DepEdge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            inc[e.dst].append(e)
        return inc

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        return {n: tuple(sorted({e.dst for e in es})) for n, es in self.out_edges.items()}

    @cached_property
    def predecessors(self) -> dict[str, tuple[str, ...]]:
        return {n: tuple(sorted({e.src for e in es})) for n, es in self.in_edges.items()}

    def modules(self) -> list[str]:
        return sorted({n.module for n in self.nodes.values()})

    def edge_triples(self) -> set[tuple[str, str, str]]:
        return {e.key for e in self.edges}

    def subgraph(self, keep: Iterable[str], *, drop_self_loops: bool = False) -> "SemanticGraph":
        keep = set(keep)
        edges = [
            e
            for e in self.edges
            if e.src in keep and e.dst in keep and not (drop_self_loops and e.src == e.dst)
        ]
        return SemanticGraph.build(
            (n for k, n in self.nodes.items() if k in keep), edges, self.diagnostics
        )


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------


@dataclass
class _SignalFacts:
    is_output: bool = False
    is_parameter: bool = False
    in_always: bool = False
    in_condition: bool = False
    in_sensitivity: bool = False
    referenced: bool = False
    defs: list[tuple[Span, bool]] = field(default_factory=list)  # (span, sequential)


def _module_facts(module: A.ModuleDecl, ast: A.Ast) -> dict[str, _SignalFacts]:
    declared = module.declared_names()
    facts = {name: _SignalFacts(is_parameter=kind == "parameter") for name, kind in declared.items()}
    for p in module.ports:
        facts[p.name].is_output = p.direction == "output"

    def touch(idents: Iterable[A.Ident], attr: str | None = None) -> None:
        for i in idents:
            f = facts.get(i.name)
            if f is not None:
                f.referenced = True
                if attr:
                    setattr(f, attr, True)

    for item in module.items:
        if isinstance(item, A.ContAssign):
            for lhs, rhs in item.assigns:
                for t in A.lvalue_targets(lhs):
                    if t.name in facts:
                        facts[t.name].defs.append((item.span, False))
                touch(A.expr_idents(lhs))
                touch(A.expr_idents(rhs))
        elif isinstance(item, A.NetDecl):
            for name, rhs in item.inits:
                if item.kind not in ("reg", "integer"):
                    facts[name].defs.append((item.span, False))
                touch(A.expr_idents(rhs))
        elif isinstance(item, A.Instance):
            for c in item.params + item.conns:
                touch(A.expr_idents(c.expr))
        elif isinstance(item, A.Always):
            seq = item.edge_triggered
            for s in item.sensitivity:
                for i in A.expr_idents(s.expr):
                    if i.name in facts:
                        facts[i.name].in_sensitivity = True
            for st in A.walk_stmt(item.body):
                assigns: list[A.ProcAssign] = []
                if isinstance(st, A.ProcAssign):
                    assigns.append(st)
                elif isinstance(st, A.For):
                    assigns.extend([st.init, st.step])
                for pa in assigns:
                    for t in A.lvalue_targets(pa.lhs):
                        if t.name in facts:
                            facts[t.name].in_always = True
                            facts[t.name].defs.append((pa.span, seq))
                    touch(A.expr_idents(pa.lhs))
                    touch(A.expr_idents(pa.rhs))
                for cond in A.condition_exprs(st):
                    touch(A.expr_idents(cond), "in_condition")
                if isinstance(st, A.SysTask):
                    for a in st.args:
                        touch(A.expr_idents(a))
    for p in module.params:
        for _, v in p.assigns:
            touch(A.expr_idents(v))
    for item in module.items:
        if isinstance(item, A.ParamDecl):
            for _, v in item.assigns:
                touch(A.expr_idents(v))
    return facts


def _classify(f: _SignalFacts) -> SignalClass:
    if f.is_output:
        return SignalClass.OUTPUT_PORT
    if f.in_always:
        return SignalClass.STATE_REGISTER
    if f.in_condition:
        return SignalClass.CONTROL_SIGNAL
    return SignalClass.INTERNAL_SIGNAL


def classify_signals(ast: A.Ast) -> dict[str, QualifiedSignal]:
    """Assign every declared signal, port and parameter one functional class.

    Priority is OutputPort > StateRegister > ControlSignal > InternalSignal.
    A signal is combinational when none of its defining statements sits in
    an edge-triggered ``always`` block (vacuously true for undriven signals).
    """
    out: dict[str, QualifiedSignal] = {}
    for m in ast.modules:
        for name, f in _module_facts(m, ast).items():
            sig = QualifiedSignal(
                module=m.name,
                name=name,
                cls=_classify(f),
                combinational=not any(seq for _, seq in f.defs),
                parameter=f.is_parameter,
                sensitivity_only=f.in_sensitivity and not f.referenced,
                spans=tuple(span for span, _ in f.defs),
            )
            out[sig.qualified_name] = sig
    return {k: out[k] for k in sorted(out)}


# --------------------------------------------------------------------------
# edge extraction
# --------------------------------------------------------------------------


def extract_edges(
    ast: A.Ast,
    signals: dict[str, QualifiedSignal],
    hierarchy: Hierarchy | None = None,
) -> SemanticGraph:
    """Build the typed dependency graph for ``ast``.

    ``hierarchy`` is accepted for interface symmetry; module edges are derived
    from every instance in the AST, whether or not it is under the top.
    """
    edges: list[DepEdge] = []
    diags: list[Diagnostic] = []

    for m in ast.modules:
        diags.extend(d for _, d in unresolved_references(m))
        mod = m.name

        def q(name: str, module: str = mod) -> str | None:
            key = f"{module}.{name}"
            return key if key in signals else None

        def add(src: str, dst: str, kind: EdgeKind, span: Span, src_mod: str = mod, dst_mod: str = mod) -> None:
            s, d = q(src, src_mod), q(dst, dst_mod)
            if s is not None and d is not None:
                edges.append(DepEdge(s, d, kind, span))

        for item in m.items:
            if isinstance(item, A.ContAssign):
                for lhs, rhs in item.assigns:
                    for t in A.lvalue_targets(lhs):
                        for s in A.expr_idents(rhs):
                            add(s.name, t.name, EdgeKind.DATA, item.span)
            elif isinstance(item, A.NetDecl) and item.kind not in ("reg", "integer"):
                for name, rhs in item.inits:
                    for s in A.expr_idents(rhs):
                        add(s.name, name, EdgeKind.DATA, item.span)
            elif isinstance(item, A.Always):
                kind = EdgeKind.TEMPORAL if item.edge_triggered else EdgeKind.DATA
                _walk_always(item.body, [], kind, add)
            elif isinstance(item, A.Instance):
                child = ast.module(item.module)
                if child is None:
                    diags.append(Diagnostic.at(item.span, f"instance of undefined module '{item.module}'"))
                    continue
                for idx, conn in enumerate(item.conns):
                    if conn.expr is None:
                        continue
                    if conn.port is None:
                        port = child.ports[idx] if idx < len(child.ports) else None
                    else:
                        port = child.port(conn.port)
                    if port is None:
                        label = conn.port if conn.port is not None else f"#{idx}"
                        diags.append(Diagnostic.at(conn.span, f"module '{child.name}' has no port {label}"))
                        continue
                    if port.direction in ("input", "inout"):
                        for s in A.expr_idents(conn.expr):
                            add(s.name, port.name, EdgeKind.MODULE, conn.span, mod, child.name)
                    if port.direction in ("output", "inout"):
                        for t in A.lvalue_targets(conn.expr):
                            add(port.name, t.name, EdgeKind.MODULE, conn.span, child.name, mod)

    return SemanticGraph.build(signals.values(), edges, diags)


def _walk_always(stmt: A.Stmt, guards: list[tuple[list[A.Ident], Span]], kind: EdgeKind, add) -> None:
    if isinstance(stmt, A.ProcAssign):
        for t in A.lvalue_targets(stmt.lhs):
            for s in A.expr_idents(stmt.rhs):
                add(s.name, t.name, kind, stmt.span)
            for conds, span in guards:
                for c in conds:
                    add(c.name, t.name, EdgeKind.CONTROL, span)
        return
    if isinstance(stmt, A.For):
        _walk_always(stmt.init, guards, kind, add)
        _walk_always(stmt.step, guards, kind, add)
    conds = [i for e in A.condition_exprs(stmt) for i in A.expr_idents(e)]
    inner = guards + [(conds, stmt.span)] if conds or isinstance(stmt, (A.If, A.Case, A.For)) else guards
    for child in A.child_stmts(stmt):
        _walk_always(child, inner, kind, add)


def build_graph(ast: A.Ast, hierarchy: Hierarchy | None = None) -> SemanticGraph:
    return extract_edges(ast, classify_signals(ast), hierarchy)


# --------------------------------------------------------------------------
# export / import
# --------------------------------------------------------------------------

_PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
]
_EDGE_STYLE = {
    EdgeKind.DATA: "solid",
    EdgeKind.TEMPORAL: "dashed",
    EdgeKind.CONTROL: "dotted",
    EdgeKind.MODULE: "bold",
}


def graph_to_dict(g: SemanticGraph) -> dict:
    return {
        "schema": GRAPH_SCHEMA,
        "nodes": [
            {
                "id": key,
                "module": n.module,
                "name": n.name,
                "class": n.cls.value,
                "combinational": n.combinational,
                "parameter": n.parameter,
                "sensitivity_only": n.sensitivity_only,
            }
            for key, n in g.nodes.items()
        ],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in g.edges],
    }


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(g: SemanticGraph, format: str = "json") -> bytes:
    if format == "json":
        return (json.dumps(graph_to_dict(g), indent=2) + "\n").encode()
    if format != "dot":
        raise ValueError(f"unknown graph format {format!r}")
    colors = {m: _PALETTE[i % len(_PALETTE)] for i, m in enumerate(g.modules())}
    lines = ["digraph semantic_graph {", "  rankdir=LR;", "  node [style=filled, fontcolor=white];"]
    by_module: dict[str, list[str]] = defaultdict(list)
    for key, n in g.nodes.items():
        by_module[n.module].append(key)
    for i, mod in enumerate(sorted(by_module)):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f"    label={_dot_quote(mod)};")
        for key in by_module[mod]:
            n = g.nodes[key]
            label = f"{n.name}\\n{n.cls.value}"
            lines.append(
                f"    {_dot_quote(key)} [label=\"{label}\", fillcolor=\"{colors[mod]}\", color=\"{colors[mod]}\"];"
            )
        lines.append("  }")
    for e in g.edges:
        lines.append(
            f"  {_dot_quote(e.src)} -> {_dot_quote(e.dst)} [label={e.kind.value}, style={_EDGE_STYLE[e.kind]}];"
        )
    lines.append("}")
    return ("\n".join(lines) + "\n").encode()


def graph_from_dict(data: dict) -> SemanticGraph:
    schema = data.get("schema", GRAPH_SCHEMA)
    if schema != GRAPH_SCHEMA:
        raise ValueError(f"unsupported graph schema {schema!r}")
    nodes = []
    for rec in data["nodes"]:
        module, _, name = rec["id"].partition(".")
        nodes.append(
            QualifiedSignal(
                module=rec.get("module", module),
                name=rec.get("name", name),
                cls=SignalClass(rec["class"]),
                combinational=bool(rec["combinational"]),
                parameter=bool(rec.get("parameter", False)),
                sensitivity_only=bool(rec.get("sensitivity_only", False)),
            )
        )
    edges = [DepEdge(e["src"], e["dst"], EdgeKind(e["kind"])) for e in data["edges"]]
    return SemanticGraph.build(nodes, edges)


def import_graph(data: bytes | str) -> SemanticGraph:
    return graph_from_dict(json.loads(data))
