import random
from pathlib import Path

import pytest

from netlistmix.netlist import PortDecl, parse_netlist
from netlistmix.registry import default_registry
from netlistmix.sampler import CheckKind, SamplerSpec, sample_random_netlist
from netlistmix.registry import NFET, PFET

DATA = Path(__file__).parent / "data"
CELL_PORTS = PortDecl(inputs=2, outputs=1, supplies=1)


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def load(registry):
    def _load(name, ports=CELL_PORTS):
        return parse_netlist((DATA / f"{name}.net").read_text(), registry, ports)
    return _load


def mos_spec(max_components=8, max_internal=3, checks=(), min_components=1):
    return SamplerSpec(
        component_pool=((NFET, 1.0), (PFET, 1.0)),
        ports=CELL_PORTS,
        min_components=min_components,
        max_components=max_components,
        min_internal=0,
        max_internal=max_internal,
        sizing={(NFET, "w"): (0.42, 10.0), (NFET, "l"): (0.15, 1.0),
                (PFET, "w"): (0.42, 10.0), (PFET, "l"): (0.15, 1.0)},
        checks_during=frozenset(CheckKind(c) for c in checks),
    )


def random_netlists(count, seed=0, **kw):
    reg = default_registry()
    spec = mos_spec(**kw)
    rng = random.Random(seed)
    return [sample_random_netlist(spec, rng, reg, normalized=False) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
