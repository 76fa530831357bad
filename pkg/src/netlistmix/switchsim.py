"""Switch-level (transistor) and gate-level (subcircuit) digital evaluation.

Combinational mode treats every MOS device as a bidirectional switch: an
NMOS conducts when its gate is a strong 1, a PMOS when its gate is a strong
0. Rails and input nets are ideal drivers. Each input vector is propagated
to a fixpoint and the output levels are compared with the truth table.

Sequential mode evaluates registered logic gates (inverter and clocked
tri-state inverter) over a stimulus sequence. Undriven nets keep their
previous value as stored charge; steps flagged ``leak`` let that charge decay
once the step has settled, which is what separates a static latch from a
dynamic one.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UnsupportedModel
from .netlist import GROUND, Netlist
from .registry import DeviceClass, ModelRegistry, Role


# conductance of a non-conducting device relative to a conducting one
LEAK_CONDUCTANCE = 1e-3


class NodeValue(enum.IntEnum):
    STRONG0 = 0
    STRONG1 = 1
    FLOAT = 2
    CONFLICT = 3
    WEAK0 = 4
    WEAK1 = 5


S0, S1, FL, CF, W0, W1 = (
    NodeValue.STRONG0, NodeValue.STRONG1, NodeValue.FLOAT,
    NodeValue.CONFLICT, NodeValue.WEAK0, NodeValue.WEAK1,
)


def logic_level(v: NodeValue) -> int | None:
    """0/1 as seen by a gate input, ``None`` for an unknown level."""
    if v in (S0, W0):
        return 0
    if v in (S1, W1):
        return 1
    return None


class Mode(str, enum.Enum):
    COMBINATIONAL = "COMBINATIONAL"
    SEQUENTIAL = "SEQUENTIAL"


@dataclass(frozen=True)
class Step:
    inputs: tuple[int, ...]
    expected: tuple[int | None, ...]
    leak: bool = False


@dataclass(frozen=True)
class DigitalTask:
    name: str
    mode: Mode
    inputs: int
    outputs: int
    steps: tuple[Step, ...]
    long_steps: tuple[Step, ...] = ()

    def __post_init__(self):
        if self.mode is Mode.COMBINATIONAL:
            covered = {s.inputs for s in self.steps}
            if len(covered) != 2 ** self.inputs:
                raise ValueError(f"{self.name}: stimulus must cover all {2 ** self.inputs} input vectors")

    def metric_names(self) -> list[str]:
        names = []
        for tag, steps in (("step", self.steps), ("long", self.long_steps)):
            for i, step in enumerate(steps):
                for o, exp in enumerate(step.expected):
                    if exp is not None:
                        names.append(f"out{o}_{tag}{i}")
        return names


def combinational_task(name: str, n_inputs: int, fn: Callable[..., Sequence[int] | int]) -> DigitalTask:
    steps = []
    for vec in itertools.product((0, 1), repeat=n_inputs):
        out = fn(*vec)
        out = (out,) if isinstance(out, int) else tuple(out)
        steps.append(Step(vec, out))
    return DigitalTask(name, Mode.COMBINATIONAL, n_inputs, len(steps[0].expected), tuple(steps))


# -- combinational, switch level ----------------------------------------------


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


class _SwitchCircuit:
    def __init__(self, n: Netlist, registry: ModelRegistry):
        index: dict[str, int] = {}

        def nid(name):
            if name not in index:
                index[name] = len(index)
            return index[name]

        ports = n.ports
        self.rails: dict[int, int] = {}
        if ports.ground:
            self.rails[nid(GROUND)] = 0
        for s in ports.supply_nets:
            self.rails[nid(s)] = 1
        self.input_ids = [nid(x) for x in ports.input_nets]
        self.output_ids = [nid(x) for x in ports.output_nets]

        self.switches = []  # (is_nmos, gate, a, b)
        for line in n.lines:
            entry = registry[line.model]
            if not entry.is_mos:
                raise UnsupportedModel(f"{line.model} is not a MOS device")
            t = line.terminals
            g = t[entry.role_index(Role.GATE)]
            d = t[entry.role_index(Role.DRAIN)]
            s = t[entry.role_index(Role.SOURCE)]
            self.switches.append((entry.device_class is DeviceClass.NMOS, nid(g), nid(d), nid(s)))
        self.size = len(index)

    def drivers(self, vector: Sequence[int]) -> dict[int, int | None]:
        """Ideal sources for one vector; ``None`` marks an input tied to the opposite rail."""
        drivers: dict[int, int | None] = dict(self.rails)
        for k, bit in zip(self.input_ids, vector):
            drivers[k] = None if k in drivers and drivers[k] != bit else bit
        return drivers

    def conducting(self, values) -> list[tuple[int, int]]:
        return [(a, b) for is_n, g, a, b in self.switches if values[g] == (S1 if is_n else S0)]

    def _adjacency(self, values) -> dict[int, list[tuple[int, int]]]:
        """Channel graph of conducting devices, each costing 1."""
        adj: dict[int, list[tuple[int, int]]] = {}
        for is_n, g, a, b in self.switches:
            if values[g] == (S1 if is_n else S0):
                adj.setdefault(a, []).append((b, 1))
                adj.setdefault(b, []).append((a, 1))
        return adj

    @staticmethod
    def _driver_distances(adj, start, drivers) -> dict[int, float]:
        """Shortest channel distance from ``start`` to a 0-driver and to a 1-driver."""
        best = {start: 0}
        heap = [(0, start)]
        found = {0: math.inf, 1: math.inf}
        while heap:
            d, k = heapq.heappop(heap)
            if d > best.get(k, math.inf):
                continue
            if k != start and k in drivers:
                bit = drivers[k]
                if bit is not None and d < found[bit]:
                    found[bit] = d
                continue  # sources terminate paths
            for m, cost in adj.get(k, ()):
                nd = d + cost
                if nd < best.get(m, math.inf):
                    best[m] = nd
                    heapq.heappush(heap, (nd, m))
        return found

    def solve(self, vector: Sequence[int]):
        """Propagate one input vector.

        Returns ``(values, contended)`` where ``contended`` is the set of nets
        whose conducting group joins drivers of both levels. Inside such a
        group a net takes the level of the strictly nearer driver (fewest
        conducting devices), CONFLICT on a tie; drivers keep their own level.
        """
        drivers = self.drivers(vector)
        values = [FL] * self.size
        for k, bit in drivers.items():
            values[k] = CF if bit is None else NodeValue(bit)

        contended: set[int] = set()
        changed: list[int] = []
        for _ in range(max(1, 4 * self.size)):
            on = self.conducting(values)
            parent = list(range(self.size))
            for a, b in on:
                ra, rb = _find(parent, a), _find(parent, b)
                if ra != rb:
                    parent[ra] = rb
            levels: dict[int, set] = {}
            for k, bit in drivers.items():
                levels.setdefault(_find(parent, k), set()).add(bit)
            mixed = {root for root, found in levels.items() if len(found) > 1}
            adj = self._adjacency(values) if mixed else {}

            new = list(values)
            contended = set()
            for k in range(self.size):
                root = _find(parent, k)
                if root in mixed:
                    contended.add(k)
                if k in drivers:
                    continue  # ideal sources keep their level for gating
                found = levels.get(root)
                if not found:
                    new[k] = FL
                elif root in mixed:
                    d = self._driver_distances(adj, k, drivers)
                    new[k] = S0 if d[0] < d[1] else S1 if d[1] < d[0] else CF
                else:
                    (bit,) = found
                    new[k] = CF if bit is None else NodeValue(bit)
            if new == values:
                return values, contended
            changed = [i for i in range(self.size) if new[i] != values[i]]
            values = new
        for k in changed:
            if k not in drivers:
                values[k] = FL
        return values, contended

    def depth(self, start: int, values) -> int | None:
        """Fewest conducting devices between ``start`` and any source."""
        d = self._driver_distances(self._adjacency(values), start,
                                   {k: 0 for k in self.rails} | {k: 0 for k in self.input_ids})
        return None if d[0] == math.inf else int(d[0])

    def level(self, k: int, values, contended: set[int], drivers) -> float:
        """Voltage-like output level in [0, 1].

        A cleanly driven net sits on its rail. Otherwise the net voltage is
        solved on a conductance network: conducting devices have conductance
        1 and, for a floating net, every other device leaks with
        ``LEAK_CONDUCTANCE``. Devices in parallel between the same two nets
        count once at their strongest, so duplicating devices never moves the
        level. The voltage maps into [0.2, 0.8], away from the 0.1/0.9
        thresholds.
        """
        v = values[k]
        if k not in contended and v in (S0, S1):
            return float(v)
        floating = k not in contended
        pairs: dict[tuple[int, int], float] = {}
        for is_n, g, a, b in self.switches:
            on = values[g] == (S1 if is_n else S0)
            if a == b or not (on or floating):
                continue
            key = (min(a, b), max(a, b))
            pairs[key] = max(pairs.get(key, 0.0), 1.0 if on else LEAK_CONDUCTANCE)
        sources = {q: 0.5 if bit is None else float(bit) for q, bit in drivers.items()}
        volts = _node_voltages(self.size, pairs, sources, k)
        # rounded so the solver's node order cannot show up in the last bits
        return 0.5 if volts is None else round(0.2 + 0.6 * volts, 9)


def _node_voltages(size: int, pairs: dict[tuple[int, int], float], sources: dict[int, float],
                   target: int) -> float | None:
    """Voltage of ``target`` by nodal analysis; None when no source reaches it."""
    adj: dict[int, list[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    group, stack = {target}, [target]
    while stack:
        for m in adj.get(stack.pop(), ()):
            if m not in group:
                group.add(m)
                if m not in sources:
                    stack.append(m)
    if not group & sources.keys():
        return None
    unknown = sorted(x for x in group if x not in sources)
    index = {x: i for i, x in enumerate(unknown)}
    g = np.zeros((len(unknown), len(unknown)))
    rhs = np.zeros(len(unknown))
    for (a, b), c in pairs.items():
        for p, q in ((a, b), (b, a)):
            if p in index:
                g[index[p], index[p]] += c
                if q in index:
                    g[index[p], index[q]] -= c
                else:
                    rhs[index[p]] += c * sources[q]
    return float(np.clip(np.linalg.solve(g, rhs)[index[target]], 0.0, 1.0))


def evaluate_combinational(n: Netlist, task: DigitalTask, registry: ModelRegistry) -> dict[str, float]:
    """Switch-level metrics for a MOS netlist.

    Per step and output: ``out{o}_step{i}`` is 1 for the correct strong,
    uncontended level and 0 otherwise; ``vout{o}_step{i}`` is the level from
    :meth:`_SwitchCircuit.level`. ``shorts`` counts steps in which drivers of
    both levels are joined, ``depth`` is the largest number of conducting
    devices between a driven output and its nearest source.
    """
    circuit = _SwitchCircuit(n, registry)
    out: dict[str, float] = {}
    shorts = 0
    depth = 0
    for i, step in enumerate(task.steps):
        values, contended = circuit.solve(step.inputs)
        drivers = circuit.drivers(step.inputs)
        for o, (k, exp) in enumerate(zip(circuit.output_ids, step.expected)):
            clean = k not in contended and values[k] in (S0, S1)
            if exp is not None:
                out[f"out{o}_step{i}"] = 1.0 if clean and values[k] == NodeValue(exp) else 0.0
                out[f"vout{o}_step{i}"] = circuit.level(k, values, contended, drivers)
            if clean:
                d = circuit.depth(k, values)
                if d is not None:
                    depth = max(depth, d)
        if contended:
            shorts += 1
    out["shorts"] = float(shorts)
    out["depth"] = float(depth)
    return out


# -- sequential, gate level -------------------------------------------------------


class _GateCircuit:
    def __init__(self, n: Netlist, registry: ModelRegistry):
        index: dict[str, int] = {}

        def nid(name):
            if name not in index:
                index[name] = len(index)
            return index[name]

        self.input_ids = [nid(x) for x in n.ports.input_nets]
        self.output_ids = [nid(x) for x in n.ports.output_nets]
        rails = {}
        if n.ports.ground:
            rails[nid(GROUND)] = 0
        for s in n.ports.supply_nets:
            rails[nid(s)] = 1
        self.rails = rails
        self.gates = []  # (kind, data, clk, out)
        for line in n.lines:
            entry = registry[line.model]
            if entry.is_mos or entry.logic not in ("INV", "TRIINV"):
                raise UnsupportedModel(f"{line.model} has no gate-level semantics")
            t = line.terminals
            data = nid(t[entry.role_index(Role.IN)])
            out = nid(t[entry.role_index(Role.OUT)])
            clk = nid(t[entry.role_index(Role.CLK)]) if entry.logic == "TRIINV" else None
            self.gates.append((entry.logic, data, clk, out))
        self.size = len(index)

    def _drive(self, values):
        """Active drive levels per net: 0, 1 or None (unknown)."""
        drives: dict[int, list] = {}
        for kind, data, clk, out in self.gates:
            if kind == "TRIINV":
                en = logic_level(values[clk])
                if en == 0:
                    continue
                if en is None:
                    drives.setdefault(out, []).append(None)
                    continue
            lvl = logic_level(values[data])
            drives.setdefault(out, []).append(None if lvl is None else 1 - lvl)
        return drives

    def _settle(self, values, forced, leak_mask=None):
        cap = max(1, 4 * self.size)
        contention = False
        last = None
        for _ in range(cap):
            drives = self._drive(values)
            new = list(values)
            contention = False
            for k in range(self.size):
                levels = drives.get(k)
                if k in forced:
                    if levels and any(lv is not None and lv != forced[k] for lv in levels):
                        contention = True
                    new[k] = NodeValue(forced[k])
                    continue
                if not levels:
                    v = values[k]
                    if leak_mask is not None and k in leak_mask:
                        new[k] = FL
                    elif v in (S0, W0):
                        new[k] = W0
                    elif v in (S1, W1):
                        new[k] = W1
                    else:
                        new[k] = v if v == FL else FL
                    continue
                known = {lv for lv in levels if lv is not None}
                if len(known) > 1:
                    new[k] = CF
                    contention = True
                elif None in levels:
                    new[k] = FL
                else:
                    new[k] = NodeValue(known.pop())
            if new == values:
                return values, contention
            last = [k for k in range(self.size) if new[k] != values[k]]
            values = new
        for k in last or ():
            if k not in forced:
                values[k] = FL
        return values, contention

    def step(self, values, step: Step):
        forced = dict(self.rails)
        for k, bit in zip(self.input_ids, step.inputs):
            forced[k] = bit
        values, contention = self._settle(values, forced)
        if step.leak:
            undriven = {k for k in range(self.size) if values[k] in (W0, W1)}
            if undriven:
                values, contention = self._settle(values, forced, leak_mask=undriven)
        return values, contention


def evaluate_sequential(n: Netlist, task: DigitalTask, registry: ModelRegistry) -> dict[str, float]:
    """Run ``task.steps`` then ``task.long_steps`` and score each output per step."""
    circuit = _GateCircuit(n, registry)
    values = [FL] * circuit.size
    out: dict[str, float] = {}
    shorts = 0
    for tag, steps in (("step", task.steps), ("long", task.long_steps)):
        for i, step in enumerate(steps):
            values, contention = circuit.step(values, step)
            conflict = False
            for o, (nid_, exp) in enumerate(zip(circuit.output_ids, step.expected)):
                lvl = logic_level(values[nid_])
                conflict |= values[nid_] == CF
                if exp is not None:
                    out[f"out{o}_{tag}{i}"] = 1.0 if lvl == exp else 0.0
            if contention or conflict:
                shorts += 1
    out["shorts"] = float(shorts)
    return out


def evaluate(n: Netlist, task: DigitalTask, registry: ModelRegistry) -> dict[str, float]:
    if task.mode is Mode.COMBINATIONAL:
        return evaluate_combinational(n, task, registry)
    return evaluate_sequential(n, task, registry)
