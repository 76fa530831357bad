import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from netlistmix.config import task_config
from netlistmix.errors import UnsupportedModel
from netlistmix.netlist import PortDecl, parse_netlist
from netlistmix.normalize import normalize
from netlistmix.registry import INV, NFET, PFET, TRIINV
from netlistmix.reward import score
from netlistmix.switchsim import (
    DigitalTask, Mode, NodeValue, Step, _SwitchCircuit, combinational_task, evaluate, evaluate_combinational,
)
from netlistmix.tasks import DIGITAL_TASKS

from conftest import CELL_PORTS, random_netlists

W = "w=1.000 l=0.150"
G = "w=6.000 l=0.150"


def n(d, g, s):
    return f"{d} {g} {s} 0 {NFET} {W}"


def p(d, g, s):
    return f"{d} {g} {s} net_supply_0 {PFET} {W}"


def cell(*rows):
    return "\n".join(f"X{i} {row}" for i, row in enumerate(rows))


TEXTBOOK = {
    "inv_fixed": cell(n("net_output_0", "net_input_0", "0"), p("net_output_0", "net_input_0", "net_supply_0")),
    "nand2_fixed": cell(n("net_output_0", "net_input_0", "net_internal_0"), n("net_internal_0", "net_input_1", "0"),
                        p("net_output_0", "net_input_0", "net_supply_0"),
                        p("net_output_0", "net_input_1", "net_supply_0")),
    "nor2_fixed": cell(n("net_output_0", "net_input_0", "0"), n("net_output_0", "net_input_1", "0"),
                       p("net_supply_0", "net_input_0", "net_internal_0"),
                       p("net_internal_0", "net_input_1", "net_output_0")),
    "and2_fixed": cell(n("net_internal_0", "net_input_0", "net_internal_1"), n("net_internal_1", "net_input_1", "0"),
                       p("net_internal_0", "net_input_0", "net_supply_0"),
                       p("net_internal_0", "net_input_1", "net_supply_0"),
                       n("net_output_0", "net_internal_0", "0"), p("net_output_0", "net_internal_0", "net_supply_0")),
    "or2_fixed": cell(n("net_internal_0", "net_input_0", "0"), n("net_internal_0", "net_input_1", "0"),
                      p("net_supply_0", "net_input_0", "net_internal_1"),
                      p("net_internal_1", "net_input_1", "net_internal_0"),
                      n("net_output_0", "net_internal_0", "0"), p("net_output_0", "net_internal_0", "net_supply_0")),
}
TEXTBOOK["nand2_sized"] = TEXTBOOK["nand2_fixed"]

STATIC_LATCH = cell(f"net_input_1 net_internal_0 {INV} {G}",
                    f"net_input_0 net_input_1 net_internal_1 {TRIINV} {G}",
                    f"net_internal_1 net_output_0 {INV} {G}",
                    f"net_output_0 net_internal_0 net_internal_1 {TRIINV} {G}")
WIRE = cell(f"net_input_0 net_internal_0 {INV} {G}", f"net_internal_0 net_output_0 {INV} {G}")
DYNAMIC = cell(f"net_input_0 net_input_1 net_internal_0 {TRIINV} {G}", f"net_internal_0 net_output_0 {INV} {G}")


def metrics(task, text):
    cfg = task_config(task)
    net = parse_netlist(text, cfg.registry, cfg.sampler.ports)
    return cfg, evaluate(net, cfg.digital, cfg.registry)


@pytest.mark.parametrize("task", sorted(TEXTBOOK))
def test_textbook_cells_reach_reward_one(task):
    cfg, m = metrics(task, TEXTBOOK[task])
    assert m["shorts"] == 0
    assert score(m, cfg.metrics).reward == 1.0


def test_nand2_truth_table():
    _, m = metrics("nand2_fixed", TEXTBOOK["nand2_fixed"])
    assert [m[f"out0_step{i}"] for i in range(4)] == [1.0] * 4
    assert [m[f"vout0_step{i}"] for i in range(4)] == [1.0, 1.0, 1.0, 0.0]
    assert m["depth"] == 2


def test_inverter_hand_propagation():
    _, m = metrics("inv_fixed", TEXTBOOK["inv_fixed"])
    assert (m["out0_step0"], m["out0_step1"], m["depth"]) == (1.0, 1.0, 1.0)


def test_nmos_pass_floats(registry):
    net = parse_netlist(cell(n("net_output_0", "net_input_0", "net_input_0")), registry, PortDecl(1, 1, 1))
    circuit = _SwitchCircuit(net, registry)
    values, _ = circuit.solve((0,))
    assert values[circuit.output_ids[0]] is NodeValue.FLOAT
    m = evaluate_combinational(net, DIGITAL_TASKS["inv"], registry)
    assert m["out0_step0"] == 0.0
    assert 0.2 <= m["vout0_step0"] <= 0.8


def test_direct_short_is_conflict(registry):
    net = parse_netlist(cell(n("net_output_0", "net_input_0", "0"), p("net_output_0", "net_input_0", "net_supply_0"),
                             n("net_supply_0", "net_input_0", "0")), registry, PortDecl(1, 1, 1))
    m = evaluate_combinational(net, DIGITAL_TASKS["inv"], registry)
    assert m["shorts"] == 1  # only the vector driving the extra NMOS
    assert m["out0_step1"] == 0.0  # contended outputs never count as correct
    assert m["vout0_step1"] < 0.5  # but sit nearer the closer driver


def test_equal_distance_contention_is_conflict(registry):
    net = parse_netlist(cell(n("net_output_0", "net_input_0", "0"), p("net_output_0", "net_input_1", "net_supply_0")),
                        registry, PortDecl(2, 1, 1))
    circuit = _SwitchCircuit(net, registry)
    values, contended = circuit.solve((1, 0))
    assert values[circuit.output_ids[0]] is NodeValue.CONFLICT
    assert circuit.output_ids[0] in contended


def out_level(net, registry, vector):
    circuit = _SwitchCircuit(net, registry)
    values, contended = circuit.solve(vector)
    return circuit.level(circuit.output_ids[0], values, contended, circuit.drivers(vector))


def test_floating_level_by_hand(registry):
    # in0=1 in1=0: everything off; leak to ground through one device (g), to supply through two (g/2)
    net = parse_netlist(cell(n("net_output_0", "net_input_1", "0"),
                             p("net_output_0", "net_input_0", "net_internal_0"),
                             p("net_internal_0", "net_input_0", "net_supply_0")), registry, CELL_PORTS)
    assert out_level(net, registry, (1, 0)) == pytest.approx(0.2 + 0.6 * (1 / 3))


def test_contended_level_by_hand(registry):
    # in0=0 in1=1: one PFET (g=1) fights a two-NMOS stack (g=1/2)
    net = parse_netlist(cell(p("net_output_0", "net_input_0", "net_supply_0"),
                             n("net_output_0", "net_input_1", "net_internal_0"),
                             n("net_internal_0", "net_input_1", "0")), registry, CELL_PORTS)
    assert out_level(net, registry, (0, 1)) == pytest.approx(0.2 + 0.6 * (2 / 3))


def test_unreachable_floating_output_is_midlevel(registry):
    net = parse_netlist(cell(n("net_output_0", "net_output_0", "net_internal_0"),
                             n("net_internal_0", "net_input_0", "net_internal_0")), registry, CELL_PORTS)
    assert out_level(net, registry, (0, 0)) == 0.5


def test_subcircuit_rejected_in_combinational(registry):
    net = parse_netlist(WIRE, registry, PortDecl(1, 1, 0, ground=False))
    with pytest.raises(UnsupportedModel):
        evaluate(net, DIGITAL_TASKS["inv"], registry)


def test_mos_rejected_in_sequential(registry):
    net = parse_netlist(TEXTBOOK["inv_fixed"], registry, PortDecl(2, 1, 1))
    with pytest.raises(UnsupportedModel):
        evaluate(net, DIGITAL_TASKS["latch"], registry)


def test_combinational_stimulus_must_be_complete():
    with pytest.raises(ValueError):
        DigitalTask("x", Mode.COMBINATIONAL, 2, 1, (Step((0, 0), (1,)),))


def short_and_long(m):
    short = [v for k, v in m.items() if "_step" in k]
    long = [v for k, v in m.items() if "_long" in k]
    return short, long


def test_static_latch_passes_everything():
    cfg, m = metrics("latch_gate", STATIC_LATCH)
    short, long = short_and_long(m)
    assert len(short) == 16 and all(short) and all(long)
    assert score(m, cfg.metrics).reward == 1.0


def test_wire_fails_holds():
    cfg, m = metrics("latch_gate", WIRE)
    short, _ = short_and_long(m)
    assert not all(short)
    assert score(m, cfg.metrics).reward < 1.0


def test_dynamic_latch_fails_long_holds_only():
    cfg, m = metrics("latch_gate", DYNAMIC)
    short, long = short_and_long(m)
    assert all(short)
    assert not all(long)
    assert score(m, cfg.metrics).reward < 1.0


# -- independent oracle: plain flood fill over conducting devices --------------

def flood_oracle(net, vector):
    """Net levels by repeated connected-component labelling; 'X' on contention, 'Z' undriven.

    The flag is set if contention shows up in any iteration or the labelling never settles.
    """
    ports = net.ports
    fixed = {"0": 0} | {s: 1 for s in ports.supply_nets} | dict(zip(ports.input_nets, vector))
    nets = set(net.nets()) | set(fixed) | set(ports.output_nets)
    value = {k: fixed.get(k, "Z") for k in nets}
    contention = False
    for _ in range(4 * len(nets) + 1):
        if contention:
            break
        g = nx.Graph()
        g.add_nodes_from(nets)
        for ln in net.lines:
            d, gate, s, _ = ln.terminals
            if value[gate] == (1 if ln.model == NFET else 0):
                g.add_edge(d, s)
        new = dict(value)
        for comp in nx.connected_components(g):
            levels = {fixed[k] for k in comp if k in fixed}
            if len(levels) > 1:
                contention = True
            for k in comp:
                if k not in fixed:
                    new[k] = levels.pop() if len(levels) == 1 else ("X" if levels else "Z")
                    levels = {fixed[j] for j in comp if j in fixed}
        if new == value:
            return value, contention
        value = new
    return value, True


def test_solver_matches_flood_oracle_without_contention(registry):
    task = DIGITAL_TASKS["nand2"]
    compared = 0
    for net in random_netlists(600, seed=21, max_components=6, max_internal=2):
        m = evaluate_combinational(net, task, registry)
        for i, step in enumerate(task.steps):
            value, contention = flood_oracle(net, step.inputs)
            if contention:
                continue
            expected = 1.0 if value["net_output_0"] == step.expected[0] else 0.0
            assert m[f"out0_step{i}"] == expected
            compared += 1
    assert compared > 1000


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evaluation_invariant_under_normalization(registry, seed):
    task = DIGITAL_TASKS["nand2"]
    for net in random_netlists(3, seed=seed):
        assert evaluate(net, task, registry) == evaluate(normalize(net, registry), task, registry)


def test_deterministic_and_terminates_on_random_netlists(registry):
    task = DIGITAL_TASKS["nor2"]
    for net in random_netlists(300, seed=22, max_components=20, max_internal=10):
        first = evaluate(net, task, registry)
        assert first == evaluate(net, task, registry)
        assert all(0.0 <= first[f"vout0_step{i}"] <= 1.0 for i in range(4))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_parallel_duplicates_do_not_change_metrics(registry, seed, copies):
    # a duplicated device conducts exactly when its original does, so no metric may move
    task = DIGITAL_TASKS["nor2"]
    for net in random_netlists(3, seed=seed):
        extra = [ln.with_index(len(net) * (c + 1) + ln.index) for c in range(copies) for ln in net.lines]
        bigger = net.with_lines(net.lines + tuple(extra))
        assert evaluate(bigger, task, registry) == evaluate(net, task, registry)


def test_latch_evaluation_invariant_under_normalization(registry):
    cfg = task_config("latch_gate")
    rng = random.Random(0)
    from netlistmix.sampler import sample_random_netlist
    for _ in range(100):
        net = sample_random_netlist(cfg.sampler, rng, cfg.registry, normalized=False)
        assert evaluate(net, cfg.digital, cfg.registry) == evaluate(normalize(net, cfg.registry), cfg.digital,
                                                                    cfg.registry)


def test_combinational_task_builder():
    t = combinational_task("xor", 2, lambda a, b: a ^ b)
    assert [s.expected for s in t.steps] == [(0,), (1,), (1,), (0,)]
