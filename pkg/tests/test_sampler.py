import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from netlistmix.errors import SamplingExhausted
from netlistmix.netlist import ComponentLine, Netlist, PortDecl, is_rail, netlist_to_graph, parse_netlist, serialize_netlist
from netlistmix.normalize import normalize
from netlistmix.registry import INV, NFET, PFET, Role
from netlistmix.sampler import CheckKind, SamplerSpec, check, check_netlist, format_value, sample_random_netlist

from conftest import CELL_PORTS, mos_spec, random_netlists

CHI2_DF5_P01 = 15.086


def spec(**kw):
    base = dict(component_pool=((NFET, 1.0), (PFET, 1.0)), ports=PortDecl(1, 1, 1),
                min_components=3, max_components=8)
    base.update(kw)
    return SamplerSpec(**base)


def test_sample_basic_properties(registry):
    rng = random.Random(0)
    for _ in range(200):
        n = sample_random_netlist(spec(), rng, registry)
        assert 3 <= len(n) <= 8
        assert normalize(n, registry) == n
        assert parse_netlist(serialize_netlist(n), registry, n.ports) == n
        for ln in n.lines:
            bulk = ln.terminals[registry[ln.model].role_index(Role.BULK)]
            assert bulk == ("0" if ln.model == NFET else "net_supply_0")
            assert not is_rail(ln.terminals[registry[ln.model].role_index(Role.GATE)])


def test_single_nfet(registry):
    n = sample_random_netlist(spec(component_pool=((NFET, 1.0),), min_components=1, max_components=1),
                              random.Random(1), registry)
    assert len(n) == 1 and n.lines[0].model == NFET


def test_count_distribution_uniform(registry):
    rng = random.Random(2)
    s = spec()
    counts = Counter(len(sample_random_netlist(s, rng, registry, normalized=False)) for _ in range(10_000))
    expected = 10_000 / 6
    chi2 = sum((counts[k] - expected) ** 2 / expected for k in range(3, 9))
    assert set(counts) == set(range(3, 9))
    assert chi2 < CHI2_DF5_P01


def test_sizes_in_range_and_three_digits(registry):
    s = spec(sizing={(NFET, "w"): (0.42, 100.0), (PFET, "w"): (0.42, 100.0)})
    rng = random.Random(3)
    for _ in range(300):
        for ln in sample_random_netlist(s, rng, registry).lines:
            w = float(dict(ln.params)["w"])
            assert 0.42 <= w <= 100.0
            assert len(f"{w:.3g}".replace(".", "").lstrip("0")) <= 3


def test_log_uniform_median(registry):
    # the median of a log-uniform draw on [0.42, 100] is sqrt(0.42 * 100)
    s = spec(sizing={(NFET, "w"): (0.42, 100.0), (PFET, "w"): (0.42, 100.0)}, min_components=1, max_components=1)
    rng = random.Random(4)
    ws = sorted(float(dict(sample_random_netlist(s, rng, registry).lines[0].params)["w"]) for _ in range(4000))
    assert abs(ws[2000] / (0.42 * 100) ** 0.5 - 1) < 0.1


def test_format_value():
    assert format_value(1.33) == "1.330"
    assert format_value(0.15) == "0.150"
    assert format_value(12.345) == "12.300"
    assert format_value(0.0123456) == "0.0123"


def test_during_checks_satisfied(registry):
    s = mos_spec(checks=("CONNECTED_IO",), min_components=3)
    rng = random.Random(5)
    for _ in range(300):
        assert check_netlist(CheckKind.CONNECTED_IO, sample_random_netlist(s, rng, registry))


def test_impossible_during_check_exhausts(registry):
    s = spec(min_components=1, max_components=1, ports=PortDecl(3, 3, 1), checks_during=frozenset({CheckKind.CONNECTED_IO}))
    with pytest.raises(SamplingExhausted):
        sample_random_netlist(s, random.Random(0), registry)


def test_connected_io_on_fig2_offspring(load):
    assert check_netlist(CheckKind.CONNECTED_IO, load("fig2_offspring"))


def test_connected_io_empty():
    assert not check_netlist(CheckKind.CONNECTED_IO, Netlist((), PortDecl(inputs=1)))


def nfet(d, g, s, i=0):
    return ComponentLine("X", i, (d, g, s, "0"), NFET, (("w", "1"), ("l", "1")))


def test_isolated_subgraphs():
    two = Netlist((nfet("net_input_0", "net_input_0", "0"), nfet("net_output_0", "net_output_0", "net_supply_0", 1)),
                  PortDecl(1, 1, 1))
    assert not check_netlist(CheckKind.NO_ISOLATED_SUBGRAPHS, two)
    joined = two.with_lines(two.lines + (nfet("net_input_0", "net_input_0", "net_output_0", 2),))
    assert check_netlist(CheckKind.NO_ISOLATED_SUBGRAPHS, joined)


def test_floating_and_paths():
    ports = PortDecl(1, 1, 1)
    dangling = Netlist((nfet("net_output_0", "net_input_0", "net_internal_0"),), ports)
    assert not check_netlist(CheckKind.NO_FLOATING_NETS, dangling)
    assert check_netlist(CheckKind.PATHS_IO, dangling)
    via_rail = Netlist((nfet("net_input_0", "net_input_0", "0"), nfet("net_output_0", "net_output_0", "0", 1)), ports)
    assert check_netlist(CheckKind.PATHS_IO, via_rail)
    split = Netlist((ComponentLine("X", 0, ("net_input_0", "net_input_0"), INV, ()),
                     ComponentLine("X", 1, ("net_output_0", "net_output_0"), INV, ())), ports)
    assert not check_netlist(CheckKind.PATHS_IO, split)
    assert check_netlist(CheckKind.CONNECTED_IO, split)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_checks_invariant_under_normalization(registry, seed):
    for n in random_netlists(3, seed=seed):
        g1, g2 = netlist_to_graph(n), netlist_to_graph(normalize(n, registry))
        for kind in CheckKind:
            assert check(kind, g1, n.ports) == check(kind, g2, n.ports)


def test_check_kind_parse():
    assert CheckKind.parse("no-floating-nets") is CheckKind.NO_FLOATING_NETS
    with pytest.raises(ValueError):
        CheckKind.parse("bogus")


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(min_components=0)
    with pytest.raises(ValueError):
        spec(min_internal=3, max_internal=1)
    with pytest.raises(ValueError):
        spec(sizing={(NFET, "w"): (2.0, 1.0)})
    assert CELL_PORTS.inputs == 2


@pytest.mark.parametrize("seed", range(3))
def test_check_all_matches_graph_checks(registry, seed):
    # degree-count fast path agrees with the graph-based definitions
    from netlistmix.sampler import check_all
    for n in random_netlists(200, seed=seed, max_components=6):
        g = netlist_to_graph(n)
        for kind in CheckKind:
            assert check_all([kind], n) == check(kind, g, n.ports)
        assert check_all(list(CheckKind), n) == all(check(k, g, n.ports) for k in CheckKind)
