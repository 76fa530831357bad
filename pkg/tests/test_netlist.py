import pytest
from hypothesis import given, settings, strategies as st

from netlistmix.errors import ArityMismatch, DuplicateComponentId, MalformedNet, MalformedParam, UnknownModel
from netlistmix.netlist import (
    NetClass, Netlist, PortDecl, net_class, netlist_to_graph, parse_netlist, serialize_netlist,
)

from conftest import random_netlists

ROW = "X0 0 net_input_0 net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170"


@pytest.mark.parametrize("raw, cls", [
    ("0", NetClass.GROUND),
    ("net_supply_0", NetClass.SUPPLY),
    ("net_input_12", NetClass.INPUT),
    ("net_output_3", NetClass.OUTPUT),
    ("net_internal_0", NetClass.INTERNAL),
])
def test_net_classes(raw, cls):
    assert net_class(raw) is cls


@pytest.mark.parametrize("raw", ["00", "net_input_01", "net_input_", "vdd", "net_internal_-1", "1"])
def test_malformed_nets(raw):
    with pytest.raises(MalformedNet):
        net_class(raw)


def test_parse_printed_row(registry):
    n = parse_netlist(ROW, registry)
    assert len(n) == 1
    line = n.lines[0]
    assert line.terminals == ("0", "net_input_0", "net_internal_0", "net_supply_0")
    assert line.params == (("w", "1.330"), ("l", "1.170"))
    assert len(ROW.split(" ")) == line.element_count == 1 + 4 + 1 + 2


def test_parse_empty(registry):
    assert len(parse_netlist("", registry)) == 0


def test_comments_and_blanks_skipped(registry):
    assert len(parse_netlist(f"* header\n\n{ROW}\n", registry)) == 1


@pytest.mark.parametrize("text, err, line_no", [
    ("X0 0 net_input_0 sky130_fd_pr__nfet_01v8 w=1 l=1", ArityMismatch, 1),
    ("X0 0 0 0 0 no_such_model", UnknownModel, 1),
    (f"{ROW}\nX1 0 bad 0 0 sky130_fd_pr__nfet_01v8", MalformedNet, 2),
    (f"{ROW}\nX0 0 0 0 0 sky130_fd_pr__nfet_01v8", DuplicateComponentId, 2),
    ("X0 0 0 0 0 sky130_fd_pr__nfet_01v8 w=1 =3", MalformedParam, 1),
])
def test_parse_errors(registry, text, err, line_no):
    with pytest.raises(err) as info:
        parse_netlist(text, registry)
    assert info.value.line_no == line_no


def test_graph_edge_count_is_total_arity(registry, load):
    n = load("fig3_parent")
    g = netlist_to_graph(n)
    assert g.number_of_edges() == sum(registry[line.model].arity for line in n.lines)


def test_serialize_format(load):
    text = serialize_netlist(load("fig2_parent2"))
    assert not text.endswith("\n")
    assert "  " not in text


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip(registry, seed):
    for n in random_netlists(5, seed=seed):
        again = parse_netlist(serialize_netlist(n), registry, n.ports)
        assert again == n


def test_port_decl_nets():
    p = PortDecl(inputs=2, outputs=1, supplies=1)
    assert p.port_nets == ["net_input_0", "net_input_1", "net_output_0"]
    assert p.rail_nets == ["0", "net_supply_0"]
    assert Netlist().ports == PortDecl()
