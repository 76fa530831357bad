"""Netlist data model, the line-level text format, and graph conversion.

Only the component-line subset of SPICE is supported::

    X0 0 net_input_0 net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170

Nets must follow the naming convention ``0`` (ground), ``net_supply_<k>``,
``net_input_<k>``, ``net_output_<k>`` or ``net_internal_<k>``. Parameter
values are kept as the exact decimal strings that were parsed so that
serialization is bit-stable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx

from .errors import (
    ArityMismatch,
    DuplicateComponentId,
    MalformedLine,
    MalformedNet,
    MalformedParam,
    UnknownModel,
)
from .registry import ModelRegistry

GROUND = "0"


class NetClass(str, Enum):
    GROUND = "GROUND"
    SUPPLY = "SUPPLY"
    INPUT = "INPUT"
    OUTPUT = "OUTPUT"
    INTERNAL = "INTERNAL"


_NET_PREFIXES = {
    "net_supply_": NetClass.SUPPLY,
    "net_input_": NetClass.INPUT,
    "net_output_": NetClass.OUTPUT,
    "net_internal_": NetClass.INTERNAL,
}
_NET_RE = re.compile(r"^(net_supply_|net_input_|net_output_|net_internal_)(0|[1-9][0-9]*)$")
_ID_RE = re.compile(r"^([A-Z])(0|[1-9][0-9]*)$")
_PARAM_RE = re.compile(
    r"^([A-Za-z_][A-Za-z0-9_]*)=([+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?(?:meg|[fpnumkgt])?)$",
    re.IGNORECASE,
)


def net_class(name: str) -> NetClass:
    """Classify a net name; raises :class:`MalformedNet` for anything off-convention."""
    if name == GROUND:
        return NetClass.GROUND
    m = _NET_RE.match(name)
    if m is None:
        raise MalformedNet(f"malformed net name {name!r}")
    return _NET_PREFIXES[m.group(1)]


def net_number(name: str) -> int:
    if name == GROUND:
        return 0
    return int(name.rsplit("_", 1)[1])


def is_rail(name: str) -> bool:
    return name == GROUND or name.startswith("net_supply_")


def internal_net(k: int) -> str:
    return f"net_internal_{k}"


@dataclass(frozen=True)
class PortDecl:
    """How many input/output/supply nets a task exposes.

    ``ground`` says whether the literal ``0`` net is available.
    """

    inputs: int = 0
    outputs: int = 0
    supplies: int = 0
    ground: bool = True

    @property
    def input_nets(self) -> list[str]:
        return [f"net_input_{i}" for i in range(self.inputs)]

    @property
    def output_nets(self) -> list[str]:
        return [f"net_output_{i}" for i in range(self.outputs)]

    @property
    def supply_nets(self) -> list[str]:
        return [f"net_supply_{i}" for i in range(self.supplies)]

    @property
    def rail_nets(self) -> list[str]:
        return ([GROUND] if self.ground else []) + self.supply_nets

    @property
    def port_nets(self) -> list[str]:
        return self.input_nets + self.output_nets


@dataclass(frozen=True)
class ComponentLine:
    prefix: str
    index: int
    terminals: tuple[str, ...]
    model: str
    params: tuple[tuple[str, str], ...] = ()

    @property
    def ident(self) -> str:
        return f"{self.prefix}{self.index}"

    def tokens(self) -> list[str]:
        return [self.ident, *self.terminals, self.model, *(f"{k}={v}" for k, v in self.params)]

    def body(self) -> str:
        """Serialized form without the component identifier (the sort key)."""
        return " ".join(self.tokens()[1:])

    def __str__(self) -> str:
        return " ".join(self.tokens())

    @property
    def element_count(self) -> int:
        return 2 + len(self.terminals) + len(self.params)

    def with_index(self, index: int) -> "ComponentLine":
        return ComponentLine(self.prefix, index, self.terminals, self.model, self.params)

    def with_terminals(self, terminals) -> "ComponentLine":
        return ComponentLine(self.prefix, self.index, tuple(terminals), self.model, self.params)

    def nets(self) -> set[str]:
        return set(self.terminals)


@dataclass(frozen=True)
class Netlist:
    lines: tuple[ComponentLine, ...] = ()
    ports: PortDecl = field(default_factory=PortDecl)

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def __str__(self) -> str:
        return serialize_netlist(self)

    def with_lines(self, lines) -> "Netlist":
        return Netlist(tuple(lines), self.ports)

    def nets(self) -> list[str]:
        """Distinct nets in order of first appearance."""
        seen: dict[str, None] = {}
        for line in self.lines:
            for net in line.terminals:
                seen.setdefault(net)
        return list(seen)

    def internal_nets(self) -> list[str]:
        return [n for n in self.nets() if n.startswith("net_internal_")]


def parse_line(tokens: list[str], registry: ModelRegistry, line_no: int | None = None) -> ComponentLine:
    """Build a :class:`ComponentLine` from its whitespace-split tokens."""
    if len(tokens) < 2:
        raise MalformedLine(f"too few tokens in {' '.join(tokens)!r}", line_no)
    m = _ID_RE.match(tokens[0])
    if m is None:
        raise MalformedLine(f"bad component identifier {tokens[0]!r}", line_no)

    # parameters are the trailing key=value tokens; the model precedes them
    end = len(tokens)
    while end > 1 and "=" in tokens[end - 1]:
        end -= 1
    if end < 2:
        raise MalformedLine("missing model name", line_no)
    model = tokens[end - 1]
    terminals = tuple(tokens[1:end - 1])
    if "=" in model:
        raise MalformedParam(f"parameter in model position: {model!r}", line_no)

    if model not in registry:
        raise UnknownModel(f"unknown model {model!r}", line_no)
    entry = registry[model]
    if len(terminals) != entry.arity:
        raise ArityMismatch(
            f"{model} takes {entry.arity} nets, got {len(terminals)}", line_no
        )
    for net in terminals:
        try:
            net_class(net)
        except MalformedNet as exc:
            raise MalformedNet(str(exc), line_no) from None
    params = []
    for tok in tokens[end:]:
        pm = _PARAM_RE.match(tok)
        if pm is None:
            raise MalformedParam(f"malformed parameter {tok!r}", line_no)
        params.append((pm.group(1), pm.group(2)))
    return ComponentLine(m.group(1), int(m.group(2)), terminals, model, tuple(params))


def parse_netlist(text: str, registry: ModelRegistry, ports: PortDecl | None = None) -> Netlist:
    """Parse newline-separated component lines.

    Blank lines and ``*`` comments are skipped. Line numbers in errors are
    1-based and refer to the raw text.
    """
    lines = []
    seen = set()
    for line_no, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        comp = parse_line(stripped.split(), registry, line_no)
        if comp.ident in seen:
            raise DuplicateComponentId(f"duplicate component {comp.ident}", line_no)
        seen.add(comp.ident)
        lines.append(comp)
    return Netlist(tuple(lines), ports or PortDecl())


def serialize_netlist(n: Netlist) -> str:
    return "\n".join(str(line) for line in n.lines)


def netlist_to_graph(n: Netlist) -> nx.MultiGraph:
    """Bipartite multigraph: component nodes ``("c", i)``, net nodes ``("n", name)``.

    One edge per terminal, keyed by terminal position. Declared input, output
    and supply nets are always present, even when nothing connects to them.
    """
    g = nx.MultiGraph()
    for net in n.ports.port_nets + n.ports.supply_nets:
        g.add_node(("n", net), kind="net", net=net)
    for i, line in enumerate(n.lines):
        g.add_node(("c", i), kind="component", model=line.model)
        for pos, net in enumerate(line.terminals):
            g.add_node(("n", net), kind="net", net=net)
            g.add_edge(("c", i), ("n", net), key=pos, position=pos)
    return g
