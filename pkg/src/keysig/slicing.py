"""Backward slicing over the semantic graph and RTL fragment reconstruction."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .frontend import ast as A
from .frontend.hierarchy import Hierarchy, item_exprs
from .graph import SemanticGraph
from .ranking import UnknownSignal, _bfs

SLICE_SCHEMA = "keysig-slice/1"
DEFAULT_NODE_CAP = 500


class SpanMismatch(ValueError):
    """The slice nodes do not belong to the AST they are materialised against."""


def slice_distances(g: SemanticGraph, root: str, depth_limit: int | None = None) -> dict[str, int]:
    """Backward BFS distance from ``root`` over every edge kind."""
    if root not in g.nodes:
        raise UnknownSignal(root)
    return _bfs(root, g.predecessors, depth_limit)


def backward_slice(
    g: SemanticGraph,
    root: str,
    depth_limit: int | None = None,
    node_cap: int | None = None,
) -> frozenset[str]:
    """Root plus every node that reaches it within ``depth_limit`` hops.

    With ``node_cap`` the farthest nodes are dropped first (ties by name).
    """
    dist = slice_distances(g, root, depth_limit)
    if node_cap is not None and len(dist) > node_cap:
        keep = sorted(dist, key=lambda n: (dist[n], n))[:max(node_cap, 1)]
        return frozenset(keep)
    return frozenset(dist)


@dataclass(frozen=True)
class Fragment:
    module: str
    text: str


@dataclass(frozen=True)
class RtlSlice:
    root: str
    nodes: frozenset[str]
    fragments: tuple[Fragment, ...]
    chain: str
    stats: dict = field(default_factory=dict, compare=False)
    root_class: str = ""
    root_combinational: bool = False

    @property
    def text(self) -> str:
        return "\n".join(f.text for f in self.fragments)

    @property
    def root_module(self) -> str:
        return self.root.split(".", 1)[0]

    @property
    def root_name(self) -> str:
        return self.root.split(".", 1)[1]


def estimate_tokens(text: str) -> int:
    """Whitespace-delimited token count; used for budgets and reports."""
    return len(text.split())


def _item_text(source_text: str, start: int, end: int) -> str:
    line_start = source_text.rfind("\n", 0, start) + 1
    indent = source_text[line_start:start]
    if indent.strip():
        indent = "  "
    return indent + source_text[start:end]


def _always_writes(item: A.Always) -> set[str]:
    out = set()
    for st in A.walk_stmt(item.body):
        pas = [st] if isinstance(st, A.ProcAssign) else [st.init, st.step] if isinstance(st, A.For) else []
        for pa in pas:
            out.update(t.name for t in A.lvalue_targets(pa.lhs))
    return out


def _conn_port(ast: A.Ast, inst: A.Instance, idx: int, conn: A.PortConn) -> A.Port | None:
    child = ast.module(inst.module)
    if child is None:
        return None
    if conn.port is not None:
        return child.port(conn.port)
    return child.ports[idx] if idx < len(child.ports) else None


def _instance_links(ast: A.Ast, inst: A.Instance, names: set[str], nodes: frozenset[str] | set[str]) -> bool:
    """True if some connection joins a slice node in the parent to a slice port of the child."""
    for idx, c in enumerate(inst.conns):
        port = _conn_port(ast, inst, idx, c)
        if port is None or c.expr is None or f"{inst.module}.{port.name}" not in nodes:
            continue
        if {i.name for i in A.expr_idents(c.expr)} & names:
            return True
    return False


def _item_idents(item: A.Item) -> set[str]:
    return {i.name for e in item_exprs(item) for i in A.expr_idents(e)}


def _selected_items(ast: A.Ast, module: A.ModuleDecl, names: set[str], nodes: frozenset[str] | set[str]) -> list[A.Item]:
    stmts: list[A.Item] = []
    for item in module.items:
        if isinstance(item, A.ContAssign):
            targets = {t.name for lhs, _ in item.assigns for t in A.lvalue_targets(lhs)}
            if targets & names:
                stmts.append(item)
        elif isinstance(item, A.NetDecl):
            if any(n in names for n, _ in item.inits) and item.kind not in ("reg", "integer"):
                stmts.append(item)
        elif isinstance(item, A.Always):
            if _always_writes(item) & names:
                stmts.append(item)
        elif isinstance(item, A.Instance):
            if _instance_links(ast, item, names, nodes):
                stmts.append(item)

    referenced = set(names)
    for item in stmts:
        referenced |= _item_idents(item)
    chosen = set(map(id, stmts))
    out = []
    for item in module.items:
        if id(item) in chosen:
            out.append(item)
        elif isinstance(item, A.PortDecl):
            out.append(item)  # non-ANSI headers need every direction
        elif isinstance(item, A.NetDecl) and set(item.names) & referenced:
            out.append(item)
        elif isinstance(item, A.ParamDecl) and {n for n, _ in item.assigns} & referenced:
            out.append(item)
    return out


def materialize_slice(
    ast: A.Ast,
    hierarchy: Hierarchy,
    nodes: frozenset[str] | set[str],
    root: str,
    *,
    truncated: bool = False,
    root_class: str = "",
    root_combinational: bool = False,
) -> RtlSlice:
    """Reconstruct source fragments for every module that owns slice nodes.

    A fragment is the module header, the declarations it needs, and every
    item that assigns a slice signal, in source order and closed with
    ``endmodule``. ``always`` blocks that assign a slice signal are kept
    whole, so the conditions guarding it come along. An instance is kept
    when one of its connections links a slice signal of the parent to a
    slice port of the child.
    """
    if root not in nodes:
        raise SpanMismatch(f"root {root} is not among the slice nodes")
    by_module: dict[str, set[str]] = {}
    for q in nodes:
        mod, _, name = q.partition(".")
        decl = ast.module(mod)
        if decl is None:
            raise SpanMismatch(f"module {mod!r} of slice node {q} is not in the AST")
        if name not in decl.declared_names():
            raise SpanMismatch(f"signal {name!r} is not declared in module {mod!r}")
        by_module.setdefault(mod, set()).add(name)

    paths = hierarchy.paths()
    order = sorted(by_module, key=lambda m: (len(paths.get(m, ())) or 10**6, m))
    fragments = []
    for mod in order:
        decl = ast.module(mod)
        assert decl is not None
        try:
            src = ast.source(decl.header_span.path).text
        except KeyError:
            raise SpanMismatch(f"source for module {mod!r} is unavailable") from None
        if decl.span.end > len(src) or not src.startswith("module", decl.header_span.start) and not src.startswith(
            "macromodule", decl.header_span.start
        ):
            raise SpanMismatch(f"module {mod!r} span does not match its source text")
        lines = [src[decl.header_span.start:decl.header_span.end]]
        for item in _selected_items(ast, decl, by_module[mod], nodes):
            item_src = ast.source(item.span.path).text
            lines.append(_item_text(item_src, item.span.start, item.span.end))
        lines.append("endmodule")
        fragments.append(Fragment(mod, "\n".join(lines) + "\n"))

    text = "\n".join(f.text for f in fragments)
    stats = {
        "node_count": len(nodes),
        "module_count": len(fragments),
        "fragment_lines": text.count("\n"),
        "token_estimate": estimate_tokens(text),
        "truncated": truncated,
    }
    return RtlSlice(
        root,
        frozenset(nodes),
        tuple(fragments),
        hierarchy.chain(root.split(".", 1)[0]),
        stats,
        root_class,
        root_combinational,
    )


def slice_signal(
    g: SemanticGraph,
    ast: A.Ast,
    hierarchy: Hierarchy,
    root: str,
    depth_limit: int | None = None,
    node_cap: int | None = DEFAULT_NODE_CAP,
) -> RtlSlice:
    dist = slice_distances(g, root, depth_limit)
    nodes = backward_slice(g, root, depth_limit, node_cap)
    sig = g.nodes[root]
    return materialize_slice(
        ast,
        hierarchy,
        nodes,
        root,
        truncated=len(nodes) < len(dist),
        root_class=sig.cls.value,
        root_combinational=sig.combinational,
    )


def safe_name(qualified: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", qualified)


def slice_meta(s: RtlSlice) -> dict:
    return {
        "schema": SLICE_SCHEMA,
        "root": s.root,
        "class": s.root_class,
        "combinational": s.root_combinational,
        "chain": s.chain,
        "modules": [f.module for f in s.fragments],
        "nodes": sorted(s.nodes),
        "stats": s.stats,
    }


def write_slice(s: RtlSlice, out_dir: str | Path) -> Path:
    d = Path(out_dir) / safe_name(s.root)
    d.mkdir(parents=True, exist_ok=True)
    (d / "slice.v").write_text(s.text)
    (d / "chain.txt").write_text(s.chain + "\n")
    (d / "meta.json").write_text(json.dumps(slice_meta(s), indent=2) + "\n")
    return d


def _guarded_reads(stmt: A.Stmt, guards: list[str], targets: set[str], out: set[str]) -> None:
    """Reads of every procedural assignment to ``targets``, guards included."""
    if isinstance(stmt, A.ProcAssign):
        if {t.name for t in A.lvalue_targets(stmt.lhs)} & targets:
            out.update(guards)
            out.update(i.name for i in A.expr_idents(stmt.rhs))
        return
    inner = guards + [i.name for e in A.condition_exprs(stmt) for i in A.expr_idents(e)]
    if isinstance(stmt, A.For):
        _guarded_reads(stmt.init, guards, targets, out)
        _guarded_reads(stmt.step, guards, targets, out)
    for child in A.child_stmts(stmt):
        _guarded_reads(child, inner, targets, out)


def closure_violations(ast: A.Ast, s: RtlSlice) -> list[str]:
    """Identifiers read by the defining statements of slice nodes that break closure.

    The fragments are re-parsed; every identifier read while defining a
    slice node (right-hand sides, guarding conditions, child input ports)
    must be a slice node, a parameter, or a signal declared in the fragment
    that nothing in the fragment drives.
    """
    from .frontend.parser import parse_text

    problems = []
    for frag in s.fragments:
        module = parse_text(frag.text, f"<slice:{frag.module}>").modules[0]
        mine = {q.split(".", 1)[1] for q in s.nodes if q.split(".", 1)[0] == frag.module}
        declared = module.declared_names()
        driven: set[str] = set()
        reads: set[str] = set()
        for item in module.items:
            if isinstance(item, A.ContAssign):
                for lhs, rhs in item.assigns:
                    targets = {t.name for t in A.lvalue_targets(lhs)}
                    driven |= targets
                    if targets & mine:
                        reads.update(i.name for i in A.expr_idents(rhs))
            elif isinstance(item, A.NetDecl) and item.kind not in ("reg", "integer"):
                for n, rhs in item.inits:
                    driven.add(n)
                    if n in mine:
                        reads.update(i.name for i in A.expr_idents(rhs))
            elif isinstance(item, A.Always):
                driven |= _always_writes(item)
                _guarded_reads(item.body, [], mine, reads)
            elif isinstance(item, A.Instance):
                for idx, c in enumerate(item.conns):
                    port = _conn_port(ast, item, idx, c)
                    if c.expr is None:
                        continue
                    if port is None or port.direction != "input":
                        driven.update(t.name for t in A.lvalue_targets(c.expr))
                    if port is not None and port.direction != "output" and f"{item.module}.{port.name}" in s.nodes:
                        reads.update(i.name for i in A.expr_idents(c.expr))
        for name in sorted(reads):
            q = f"{frag.module}.{name}"
            if q in s.nodes:
                continue
            kind = declared.get(name)
            if kind == "parameter":
                continue
            if kind is not None and name not in driven:
                continue
            problems.append(f"{q}: read but neither a slice node nor a free fragment input")
    return problems


def load_slice(directory: str | Path) -> RtlSlice:
    """Read back a slice written by :func:`write_slice`."""
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    if meta.get("schema") != SLICE_SCHEMA:
        raise ValueError(f"{d / 'meta.json'}: unexpected schema {meta.get('schema')!r}")
    chunks: list[list[str]] = [[]]
    for line in (d / "slice.v").read_text().splitlines():
        if not chunks[-1] and not line.strip():
            continue
        chunks[-1].append(line)
        if line == "endmodule":
            chunks.append([])
    texts = ["\n".join(c) + "\n" for c in chunks if c]
    if len(texts) != len(meta["modules"]):
        raise ValueError(f"{d / 'slice.v'}: expected {len(meta['modules'])} module fragments, found {len(texts)}")
    return RtlSlice(
        meta["root"],
        frozenset(meta["nodes"]),
        tuple(Fragment(m, t) for m, t in zip(meta["modules"], texts)),
        meta["chain"],
        meta["stats"],
        meta["class"],
        meta["combinational"],
    )
