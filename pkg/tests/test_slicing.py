import json
import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import I2C_SOURCES, corpus_files, design_from_text, load_design
from oracles import make_graph
from randdesign import random_design

from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.frontend import ast as A
from keysig.frontend.parser import parse_text
from keysig.graph import build_graph
from keysig.ranking import UnknownSignal
from keysig.slicing import (
    SLICE_SCHEMA,
    SpanMismatch,
    backward_slice,
    closure_violations,
    estimate_tokens,
    load_slice,
    materialize_slice,
    slice_distances,
    slice_signal,
    write_slice,
)

DEPTHS = [1, 2, 3, None]


def _random(seed):
    d = random_design(seed)
    ast = parse_sources([SourceFile(p, t) for p, t in d.sources.items()])
    hier = resolve_hierarchy(ast)
    return ast, hier, build_graph(ast, hier)


def _defines(item, name):
    if isinstance(item, A.ContAssign):
        return any(t.name == name for lhs, _ in item.assigns for t in A.lvalue_targets(lhs))
    if isinstance(item, A.NetDecl):
        return any(n == name for n, _ in item.inits)
    if isinstance(item, A.Always):
        return any(
            t.name == name
            for st_ in A.walk_stmt(item.body)
            if isinstance(st_, A.ProcAssign)
            for t in A.lvalue_targets(st_.lhs)
        )
    return False


def _check_slice(ast, s):
    assert closure_violations(ast, s) == []
    # every fragment re-parses on its own
    for frag in s.fragments:
        mods = parse_text(frag.text, "<frag>").modules
        assert [m.name for m in mods] == [frag.module]
    # root containment: a root with a driver in the design keeps one in its fragment
    decl = ast.module(s.root_module)
    if any(_defines(it, s.root_name) for it in decl.items):
        frag = next(f for f in s.fragments if f.module == s.root_module)
        items = parse_text(frag.text, "<frag>").modules[0].items
        assert any(_defines(it, s.root_name) for it in items)
    # chain ends at the root module
    assert s.chain.split(".")[-1] == s.root_module
    assert abs(s.stats["token_estimate"] - len(s.text.split())) <= 0.1 * len(s.text.split())


# ---------------------------------------------------------------- backward_slice


def test_isolated_root():
    g = make_graph(3, [(1, 2, "data")])
    assert backward_slice(g, "m.n0") == {"m.n0"}


def test_chain_root():
    g = make_graph(3, [(0, 1, "data"), (1, 2, "temporal")])
    assert backward_slice(g, "m.n2") == {"m.n0", "m.n1", "m.n2"}


def test_all_edge_kinds_traversed():
    g = make_graph(5, [(0, 4, "data"), (1, 4, "temporal"), (2, 4, "control"), (3, 4, "module")])
    assert backward_slice(g, "m.n4") == {f"m.n{i}" for i in range(5)}


def test_unknown_root():
    with pytest.raises(UnknownSignal):
        backward_slice(make_graph(1, []), "m.q")


def test_slice_matches_reachability_oracle():
    for seed in range(60):
        g = oracles.random_graph(random.Random(seed))
        _, bwd = oracles.reach_sets(g)
        for v in g.nodes:
            assert backward_slice(g, v) == bwd[v] | {v}


def test_depth_limited_distances_match_networkx():
    for seed in range(40):
        g = oracles.random_graph(random.Random(seed))
        rev = nx.DiGraph()
        rev.add_nodes_from(g.nodes)
        rev.add_edges_from((e.dst, e.src) for e in g.edges)
        for v in g.nodes:
            want = nx.single_source_shortest_path_length(rev, v)
            assert slice_distances(g, v) == want
            for d in (0, 1, 2):
                assert backward_slice(g, v, d) == {n for n, k in want.items() if k <= d}


def test_cross_module_diamond():
    ast, hier, g = design_from_text(
        """
        module leaf(input a, input b, output y);
            wire l, r;
            assign l = a & b;
            assign r = a | b;
            assign y = l ^ r;
        endmodule
        module top(input p, input q, output z);
            wire pq;
            assign pq = p ^ q;
            leaf u(.a(pq), .b(q), .y(z));
        endmodule
        """
    )
    nodes = backward_slice(g, "leaf.y")
    assert {"top.pq", "top.p", "top.q", "leaf.a", "leaf.b", "leaf.l", "leaf.r"} <= nodes
    _, bwd = oracles.reach_sets(g)
    assert nodes == bwd["leaf.y"] | {"leaf.y"}
    s = materialize_slice(ast, hier, nodes, "leaf.y")
    assert [f.module for f in s.fragments] == ["top", "leaf"]
    assert s.chain == "top.leaf"
    _check_slice(ast, s)


@pytest.mark.parametrize("seed", range(20))
def test_depth_monotonicity_random_designs(seed):
    _, _, g = _random(seed)
    for root in sorted(g.nodes):
        slices = [backward_slice(g, root, d) for d in DEPTHS]
        for small, big in zip(slices, slices[1:]):
            assert small <= big
        assert root in slices[0]


def test_node_cap_truncates_farthest_first():
    n = 10
    g = make_graph(n, [(i, i + 1, "data") for i in range(n - 1)])
    capped = backward_slice(g, "m.n9", node_cap=3)
    assert capped == {"m.n9", "m.n8", "m.n7"}


def test_node_cap_recorded_in_stats():
    ast, hier, g = design_from_text(
        "module m(input a, output y); wire b, c, d; assign b = a; assign c = b; assign d = c; assign y = d; endmodule"
    )
    s = slice_signal(g, ast, hier, "m.y", node_cap=2)
    assert s.stats["truncated"] and s.stats["node_count"] == 2
    assert not slice_signal(g, ast, hier, "m.y").stats["truncated"]


# ---------------------------------------------------------------- materialisation


def test_single_assign_fragment():
    ast, hier, g = design_from_text("module m(input a, output y);\n  wire t;\n  assign y = a;\n  assign t = ~a;\nendmodule\n")
    s = slice_signal(g, ast, hier, "m.y")
    assert s.text == "module m(input a, output y);\n  assign y = a;\nendmodule\n"
    assert s.chain == "m"
    assert s.stats["module_count"] == 1 and s.stats["fragment_lines"] == 3


def test_two_modules_parent_before_child():
    ast, hier, g = design_from_text(
        """
        module child(input i, output o); assign o = ~i; endmodule
        module parent(input x, output z); child c0(.i(x), .o(z)); endmodule
        """
    )
    s = slice_signal(g, ast, hier, "parent.z")
    assert [f.module for f in s.fragments] == ["parent", "child"]
    assert "child c0" in s.fragments[0].text
    assert "assign o = ~i;" in s.fragments[1].text
    _check_slice(ast, s)


def test_c_state_slice(i2c):
    ast, hier, g = i2c
    s = slice_signal(g, ast, hier, "i2c_master_byte_ctrl.c_state")
    assert s.chain == "i2c_master_top.i2c_master_byte_ctrl"
    byte = next(f for f in s.fragments if f.module == "i2c_master_byte_ctrl")
    assert "case (c_state)" in byte.text
    assert "c_state  <= ST_START;" in byte.text
    assert "localparam" in byte.text
    _check_slice(ast, s)


def test_fixture_slices_are_closed(i2c):
    ast, hier, g = i2c
    for root in sorted(g.nodes):
        if g.nodes[root].parameter:
            continue
        _check_slice(ast, slice_signal(g, ast, hier, root))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.name)
def test_corpus_slices_are_closed(path):
    ast, hier, g = load_design([path])
    for root in sorted(g.nodes):
        if g.nodes[root].parameter:
            continue
        _check_slice(ast, slice_signal(g, ast, hier, root))


@given(st.integers(min_value=0, max_value=10_000))
def test_random_design_slices_are_closed(seed):
    ast, hier, g = _random(seed)
    # closure is a property of full slices; depth-limited ones cut drivers on purpose
    for root in sorted(g.nodes)[:8]:
        _check_slice(ast, slice_signal(g, ast, hier, root))


def test_span_mismatch_on_foreign_nodes(i2c):
    ast, hier, _ = design_from_text("module m(input a, output y); assign y = a; endmodule")
    _, _, g = i2c
    nodes = backward_slice(g, "i2c_master_top.irq")
    with pytest.raises(SpanMismatch):
        materialize_slice(ast, hier, nodes, "i2c_master_top.irq")


def test_span_mismatch_on_stale_ast():
    _, hier, g = design_from_text("module m(input a, output y); wire t; assign t = a; assign y = t; endmodule")
    stale = parse_sources([SourceFile("t.v", "module m(input a, output y); assign y = a; endmodule")])
    with pytest.raises(SpanMismatch):
        materialize_slice(stale, hier, backward_slice(g, "m.y"), "m.y")


def test_root_must_be_in_nodes():
    ast, hier, g = design_from_text("module m(input a, output y); assign y = a; endmodule")
    with pytest.raises(SpanMismatch):
        materialize_slice(ast, hier, {"m.a"}, "m.y")


def test_estimate_tokens():
    assert estimate_tokens("a  b\n\tc") == 3
    assert estimate_tokens("") == 0


# ---------------------------------------------------------------- on-disk format


def test_write_and_load_roundtrip(tmp_path, i2c):
    ast, hier, g = i2c
    s = slice_signal(g, ast, hier, "i2c_master_bit_ctrl.sda_oen")
    d = write_slice(s, tmp_path)
    assert d.name == "i2c_master_bit_ctrl.sda_oen"
    assert sorted(p.name for p in d.iterdir()) == ["chain.txt", "meta.json", "slice.v"]
    assert (d / "chain.txt").read_text() == s.chain + "\n"
    meta = json.loads((d / "meta.json").read_text())
    assert meta["schema"] == SLICE_SCHEMA and meta["nodes"] == sorted(s.nodes)
    back = load_slice(d)
    assert back == s and back.stats == s.stats and back.text == s.text


def test_load_rejects_bad_schema(tmp_path, i2c):
    ast, hier, g = i2c
    d = write_slice(slice_signal(g, ast, hier, "i2c_master_top.irq"), tmp_path)
    meta = json.loads((d / "meta.json").read_text())
    meta["schema"] = "other"
    (d / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(ValueError):
        load_slice(d)


def test_write_is_deterministic(tmp_path):
    ast, hier, g = load_design(I2C_SOURCES)
    s = slice_signal(g, ast, hier, "i2c_master_top.rdata")
    a = write_slice(s, tmp_path / "a")
    b = write_slice(s, tmp_path / "b")
    for name in ("slice.v", "chain.txt", "meta.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
