"""Random netlist sampler and graph-level consistency checks."""

from __future__ import annotations

import enum
import math
import random
from collections import Counter
from dataclasses import dataclass, field

import networkx as nx

from .errors import SamplingExhausted
from .netlist import GROUND, ComponentLine, Netlist, PortDecl, internal_net, is_rail, netlist_to_graph
from .normalize import normalize
from .registry import DeviceClass, ModelRegistry, Role

MAX_LINE_ATTEMPTS = 100


class CheckKind(str, enum.Enum):
    CONNECTED_IO = "CONNECTED_IO"
    PATHS_IO = "PATHS_IO"
    NO_FLOATING_NETS = "NO_FLOATING_NETS"
    NO_ISOLATED_SUBGRAPHS = "NO_ISOLATED_SUBGRAPHS"

    @classmethod
    def parse(cls, name: str) -> "CheckKind":
        return cls(name.strip().upper().replace("-", "_"))


@dataclass(frozen=True)
class SamplerSpec:
    component_pool: tuple[tuple[str, float], ...]
    ports: PortDecl
    min_components: int = 1
    max_components: int = 8
    min_internal: int = 0
    max_internal: int = 2
    force_bulk: bool = True
    no_gate_to_rail: bool = True
    # (model, param) -> (min, max); falls back to the registry schema
    sizing: dict[tuple[str, str], tuple[float, float]] = field(default_factory=dict)
    checks_during: frozenset[CheckKind] = frozenset()
    checks_after: frozenset[CheckKind] = frozenset()

    def __post_init__(self):
        if not 1 <= self.min_components <= self.max_components:
            raise ValueError("need 1 <= min_components <= max_components")
        if not 0 <= self.min_internal <= self.max_internal:
            raise ValueError("need 0 <= min_internal <= max_internal")
        if not self.component_pool:
            raise ValueError("component pool is empty")
        for key, (lo, hi) in self.sizing.items():
            if lo > hi:
                raise ValueError(f"sizing range for {key} has min > max")

    def __hash__(self):
        return hash((self.component_pool, self.ports, self.min_components, self.max_components))


def format_value(value: float) -> str:
    """Round to 3 significant digits, printed with at least 3 decimals (``1.33`` -> ``1.330``)."""
    if value == 0:
        return "0.000"
    rounded = float(f"{value:.3g}")
    decimals = max(3, 2 - math.floor(math.log10(abs(rounded))))
    return f"{rounded:.{decimals}f}"


def sample_size(lo: float, hi: float, rng: random.Random) -> str:
    if lo == hi:
        return format_value(lo)
    if lo > 0:
        return format_value(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    return format_value(rng.uniform(lo, hi))


class _LineSampler:
    def __init__(self, spec: SamplerSpec, registry: ModelRegistry, internals: list[str]):
        self.spec = spec
        self.registry = registry
        ports = spec.ports
        rails = ports.rail_nets
        self.universe = ports.input_nets + ports.output_nets + internals + rails
        self.no_rail = [n for n in self.universe if not is_rail(n)] or self.universe
        self.models = [m for m, _ in spec.component_pool]
        self.weights = [w for _, w in spec.component_pool]

    def _bulk(self, device_class: DeviceClass) -> str | None:
        ports = self.spec.ports
        if device_class is DeviceClass.NMOS and ports.ground:
            return GROUND
        if device_class is DeviceClass.PMOS and ports.supplies:
            return ports.supply_nets[0]
        return None

    def sample(self, index: int, rng: random.Random) -> ComponentLine:
        model = rng.choices(self.models, weights=self.weights)[0]
        entry = self.registry[model]
        terminals = []
        for role in entry.roles:
            if role is Role.BULK and self.spec.force_bulk and entry.is_mos:
                bulk = self._bulk(entry.device_class)
                if bulk is not None:
                    terminals.append(bulk)
                    continue
            if role in (Role.GATE, Role.IN, Role.CLK) and self.spec.no_gate_to_rail:
                terminals.append(rng.choice(self.no_rail))
            else:
                terminals.append(rng.choice(self.universe))
        params = []
        for p in entry.params:
            lo, hi = self.spec.sizing.get((model, p.key), (p.min, p.max))
            params.append((p.key, sample_size(lo, hi, rng)))
        return ComponentLine(entry.prefix, index, tuple(terminals), model, tuple(params))

    @property
    def max_free_terminals(self) -> int:
        """Most terminals one line can put on a non-rail net."""
        best = 0
        for m in self.models:
            entry = self.registry[m]
            free = entry.arity
            if self.spec.force_bulk and entry.is_mos and self._bulk(entry.device_class) is not None:
                free -= 1
            best = max(best, free)
        return best


def sample_random_netlist(
    spec: SamplerSpec,
    rng: random.Random,
    registry: ModelRegistry,
    normalized: bool = True,
) -> Netlist:
    """Draw a netlist uniformly over components, wiring and sizes.

    With ``checks_during`` set, each new line is redrawn (up to 100 times)
    until the partial netlist can still satisfy every requested check; the
    last line must satisfy them outright.
    """
    count = rng.randint(spec.min_components, spec.max_components)
    n_internal = rng.randint(spec.min_internal, spec.max_internal)
    sampler = _LineSampler(spec, registry, [internal_net(k) for k in range(n_internal)])

    lines: list[ComponentLine] = []
    for index in range(count):
        for _ in range(MAX_LINE_ATTEMPTS):
            line = sampler.sample(index, rng)
            if not spec.checks_during:
                break
            remaining_slots = (count - index - 1) * sampler.max_free_terminals
            candidate = Netlist(tuple(lines) + (line,), spec.ports)
            if all(_partial_check(k, candidate, remaining_slots) for k in spec.checks_during):
                break
        else:
            raise SamplingExhausted(f"could not place line {index} within {MAX_LINE_ATTEMPTS} attempts")
        lines.append(line)

    n = Netlist(tuple(lines), spec.ports)
    return normalize(n, registry) if normalized else n


# -- consistency checks ------------------------------------------------------


def _net_degree(g: nx.MultiGraph, net: str) -> int:
    node = ("n", net)
    return g.degree(node) if node in g else 0


def check(kind: CheckKind, g: nx.MultiGraph, ports: PortDecl) -> bool:
    """Evaluate one structural check on a circuit graph (see :func:`netlist_to_graph`)."""
    kind = CheckKind(kind)
    if kind is CheckKind.CONNECTED_IO:
        return all(_net_degree(g, net) >= 1 for net in ports.port_nets)
    if kind is CheckKind.PATHS_IO:
        for a in ports.input_nets:
            for b in ports.output_nets:
                if ("n", a) not in g or ("n", b) not in g or not nx.has_path(g, ("n", a), ("n", b)):
                    return False
        return True
    if kind is CheckKind.NO_FLOATING_NETS:
        for node, data in g.nodes(data=True):
            if data["kind"] == "net" and data["net"].startswith("net_internal_") and g.degree(node) < 2:
                return False
        return all(_net_degree(g, net) >= 1 for net in ports.port_nets)
    if kind is CheckKind.NO_ISOLATED_SUBGRAPHS:
        core = _without_rails(g)
        return core.number_of_nodes() == 0 or nx.is_connected(core)
    raise ValueError(f"unknown check {kind}")


def _without_rails(g: nx.MultiGraph) -> nx.MultiGraph:
    keep = [n for n, d in g.nodes(data=True) if d["kind"] == "component" or not is_rail(d["net"])]
    return g.subgraph(keep)


def check_netlist(kind: CheckKind, n: Netlist) -> bool:
    return check(kind, netlist_to_graph(n), n.ports)


_DEGREE_ONLY = (CheckKind.CONNECTED_IO, CheckKind.NO_FLOATING_NETS)


def net_degrees(n: Netlist) -> Counter:
    """Terminal count per net; equals the net's degree in the circuit graph."""
    return Counter(net for line in n.lines for net in line.terminals)


def _degree_check(kind: CheckKind, deg: Counter, ports: PortDecl) -> bool:
    if any(deg[net] == 0 for net in ports.port_nets):
        return False
    if kind is CheckKind.NO_FLOATING_NETS:
        return all(d >= 2 for net, d in deg.items() if net.startswith("net_internal_"))
    return True


def check_all(kinds, n: Netlist) -> bool:
    if not kinds:
        return True
    kinds = [CheckKind(k) for k in kinds]
    deg = net_degrees(n)
    if not all(_degree_check(k, deg, n.ports) for k in kinds if k in _DEGREE_ONLY):
        return False
    rest = [k for k in kinds if k not in _DEGREE_ONLY]
    if not rest:
        return True
    g = netlist_to_graph(n)
    return all(check(k, g, n.ports) for k in rest)


def _partial_check(kind: CheckKind, n: Netlist, remaining_slots: int) -> bool:
    """Relaxed check for a netlist still under construction.

    ``remaining_slots`` is an upper bound on the terminals the lines still to
    be drawn can contribute; with zero slots left the full check applies.
    """
    if kind in _DEGREE_ONLY:
        deg = net_degrees(n)
        if remaining_slots == 0:
            return _degree_check(kind, deg, n.ports)
        unconnected = sum(1 for net in n.ports.port_nets if deg[net] == 0)
        if kind is CheckKind.NO_FLOATING_NETS:
            unconnected += sum(1 for net, d in deg.items() if net.startswith("net_internal_") and d == 1)
        return unconnected <= remaining_slots
    if kind is CheckKind.PATHS_IO and remaining_slots > 0:
        return True
    g = netlist_to_graph(n)
    if remaining_slots == 0:
        return check(kind, g, n.ports)
    if kind is CheckKind.NO_ISOLATED_SUBGRAPHS:
        core = _without_rails(g)
        core = core.subgraph([node for node in core if core.degree(node) > 0])
        return core.number_of_nodes() == 0 or nx.is_connected(core)
    raise ValueError(f"unknown check {kind}")
