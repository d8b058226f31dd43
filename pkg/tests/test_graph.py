import json

import pytest
from hypothesis import given, strategies as st

from conftest import design_from_text
from randdesign import random_design

from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.graph import (
    GRAPH_SCHEMA,
    DepEdge,
    EdgeKind,
    QualifiedSignal,
    SemanticGraph,
    SignalClass,
    build_graph,
    export_graph,
    import_graph,
)


def triples(text):
    return design_from_text(text)[2].edge_triples()


# ---------------------------------------------------------------- classes


def test_i2c_classes(i2c):
    _, _, g = i2c
    n = g.nodes
    c = n["i2c_master_byte_ctrl.c_state"]
    assert c.cls is SignalClass.STATE_REGISTER and not c.combinational
    assert n["i2c_master_byte_ctrl.go"].cls is SignalClass.CONTROL_SIGNAL
    assert n["i2c_master_byte_ctrl.go"].combinational
    assert n["i2c_master_top.irq"].cls is SignalClass.OUTPUT_PORT
    assert n["i2c_master_bit_ctrl.sta_condition"].cls is SignalClass.INTERNAL_SIGNAL
    assert n["i2c_master_byte_ctrl.ST_IDLE"].parameter
    assert n["i2c_master_bit_ctrl.clk"].sensitivity_only
    assert not n["i2c_master_top.clk"].sensitivity_only  # passed to a child


def test_class_priority():
    _, _, g = design_from_text(
        """
        module m(input clk, input a, input s, output reg y);
            reg r, c;
            wire w;
            always @(posedge clk) begin
                if (r) y <= a;
                r <= s;
            end
            always @* if (c) c = a;
            assign w = s;
        endmodule
        """
    )
    n = g.nodes
    assert n["m.y"].cls is SignalClass.OUTPUT_PORT  # output beats state register
    assert n["m.r"].cls is SignalClass.STATE_REGISTER  # state beats control
    assert n["m.s"].cls is SignalClass.INTERNAL_SIGNAL
    assert n["m.c"].cls is SignalClass.STATE_REGISTER and n["m.c"].combinational
    assert n["m.w"].cls is SignalClass.INTERNAL_SIGNAL and n["m.w"].combinational
    assert not n["m.r"].combinational


def test_control_class_from_case_subject():
    g = design_from_text(
        "module m(input [1:0] s, input a, output reg y); always @* case (s) 0: y = a; default: y = 0; endcase endmodule"
    )[2]
    assert g.nodes["m.s"].cls is SignalClass.CONTROL_SIGNAL


# ---------------------------------------------------------------- edge rules


def test_continuous_assign_data_edges():
    assert triples("module m(input a, b, output y); assign y = a & b; endmodule") == {
        ("m.a", "m.y", "data"),
        ("m.b", "m.y", "data"),
    }


def test_wire_initializer_is_data():
    assert triples("module m(input a, output y); wire t = ~a; assign y = t; endmodule") == {
        ("m.a", "m.t", "data"),
        ("m.t", "m.y", "data"),
    }


def test_sequential_assignment_is_temporal_with_control_guards():
    got = triples(
        """
        module m(input clk, input en, input sel, input d, output reg q);
            always @(posedge clk)
                if (en) begin
                    if (sel) q <= d;
                end
        endmodule
        """
    )
    assert got == {("m.d", "m.q", "temporal"), ("m.en", "m.q", "control"), ("m.sel", "m.q", "control")}


def test_combinational_always_is_data_and_case_labels_are_control():
    got = triples(
        """
        module m(input [1:0] s, input a, b, output reg y);
            localparam K = 2'd1;
            always @* case (s) K: y = a; default: y = b; endcase
        endmodule
        """
    )
    assert got == {
        ("m.a", "m.y", "data"),
        ("m.b", "m.y", "data"),
        ("m.s", "m.y", "control"),
        ("m.K", "m.y", "control"),
    }


def test_ternary_condition_is_data_not_control():
    assert ("m.s", "m.y", "data") in triples("module m(input s, a, b, output y); assign y = s ? a : b; endmodule")


def test_lhs_index_expression_adds_no_edge():
    got = triples("module m(input clk, input [1:0] i, input d, output reg [3:0] q); always @(posedge clk) q[i] <= d; endmodule")
    assert got == {("m.d", "m.q", "temporal")}


def test_for_loop_edges():
    got = triples(
        """
        module m(input [3:0] v, output reg [2:0] n);
            integer i;
            always @* begin
                n = 0;
                for (i = 0; i < 4; i = i + 1) n = n + v[i];
            end
        endmodule
        """
    )
    assert ("m.i", "m.n", "control") in got and ("m.v", "m.n", "data") in got
    assert ("m.i", "m.i", "data") in got  # step i = i + 1


def test_module_edges_named_positional_and_output():
    got = triples(
        """
        module leaf(input a, output y); assign y = ~a; endmodule
        module top(input p, q, output r, s);
            leaf u0(.a(p & q), .y(r));
            leaf u1(q, s);
        endmodule
        """
    )
    assert {
        ("top.p", "leaf.a", "module"),
        ("top.q", "leaf.a", "module"),
        ("leaf.y", "top.r", "module"),
        ("leaf.y", "top.s", "module"),
        ("leaf.a", "leaf.y", "data"),
    } == got


def test_inout_port_edges_both_ways():
    got = triples(
        """
        module pad(inout io, input d, output q); assign q = io; endmodule
        module top(inout b, input x, output z); pad u(.io(b), .d(x), .q(z)); endmodule
        """
    )
    assert ("top.b", "pad.io", "module") in got and ("pad.io", "top.b", "module") in got


def test_unconnected_ports_add_nothing():
    got = triples(
        """
        module leaf(input a, input b, output y); assign y = a; endmodule
        module top(input p, output r); leaf u(.a(p), .b(), .y(r)); endmodule
        """
    )
    assert not any(t[1] == "leaf.b" for t in got)


def test_unresolved_identifier_becomes_diagnostic():
    g = design_from_text("module m(input a, output y);\n  assign y = a | nope;\nendmodule\n")[2]
    assert g.edge_triples() == {("m.a", "m.y", "data")}
    assert g.diagnostics and g.diagnostics[0].line == 2


def test_duplicate_edges_collapse():
    g = design_from_text("module m(input a, output y); assign y = a + a; endmodule")[2]
    assert len(g.edges) == 1


@given(st.integers(min_value=0, max_value=50_000))
def test_random_design_edges_match_reference(seed):
    d = random_design(seed)
    ast = parse_sources([SourceFile(p, t) for p, t in d.sources.items()])
    g = build_graph(ast, resolve_hierarchy(ast))
    assert g.edge_triples() == d.expected
    assert not g.diagnostics


# ---------------------------------------------------------------- structure and export


def test_build_rejects_dangling_edge():
    n = QualifiedSignal("m", "a", SignalClass.INTERNAL_SIGNAL, True)
    with pytest.raises(ValueError):
        SemanticGraph.build([n], [DepEdge("m.a", "m.b", EdgeKind.DATA)])


def test_subgraph_drops_self_loops():
    g = design_from_text("module m(input clk, input a, output reg y); always @(posedge clk) y <= y ^ a; endmodule")[2]
    assert ("m.y", "m.y", "temporal") in g.edge_triples()
    sub = g.subgraph(g.nodes, drop_self_loops=True)
    assert ("m.y", "m.y", "temporal") not in sub.edge_triples()


def test_json_roundtrip(i2c):
    _, _, g = i2c
    data = export_graph(g, "json")
    doc = json.loads(data)
    assert doc["schema"] == GRAPH_SCHEMA
    again = import_graph(data)
    assert again == g
    assert export_graph(again, "json") == data


@given(st.integers(min_value=0, max_value=10_000))
def test_json_roundtrip_random(seed):
    d = random_design(seed)
    ast = parse_sources([SourceFile(p, t) for p, t in d.sources.items()])
    g = build_graph(ast)
    assert import_graph(export_graph(g)) == g


def test_dot_export(i2c):
    _, _, g = i2c
    dot = export_graph(g, "dot").decode()
    assert dot.startswith("digraph")
    assert dot.count("subgraph cluster_") == len(g.modules())
    for m in g.modules():
        assert f'label="{m}";' in dot
    assert "style=dashed" in dot or "style=dotted" in dot
    assert dot.count("->") == len(g.edges)


def test_export_unknown_format(i2c):
    with pytest.raises(ValueError):
        export_graph(i2c[2], "gml")
