"""Netlist canonicalization.

Four passes, iterated to a fixpoint:

1. MOS drain/source nets sorted so that drain <= source.
2. Lines grouped into input, internal and output blocks and sorted within
   each block by their text (identifier excluded).
3. Internal nets renamed ``net_internal_0, 1, ...`` by first appearance.
4. Components renumbered ``0..L-1`` in line order.

Comparisons are plain byte-wise string comparisons, so ``net_internal_10``
sorts before ``net_internal_2``.

Line sorting looks at internal net names, so two netlists that differ only in
how their internal nets are labelled can land on different fixpoints. To make
the result canonical, :func:`normalize` runs the fixpoint from every
relabelling of the internal nets and keeps the smallest text.
"""

from __future__ import annotations

import itertools
import logging
import warnings

from .errors import NormalizationDiverged
from .netlist import ComponentLine, Netlist, serialize_netlist
from .registry import ModelRegistry, Role

log = logging.getLogger(__name__)

MAX_ITERATIONS = 16
# relabelling search is k! fixpoint runs; above this many internal nets only
# the identity labelling is used
MAX_RELABEL_NETS = 6

_INPUT, _INTERNAL, _OUTPUT = 0, 1, 2


def sort_device_terminals(n: Netlist, registry: ModelRegistry) -> Netlist:
    lines = []
    for line in n.lines:
        entry = registry[line.model]
        if entry.is_mos:
            d = entry.role_index(Role.DRAIN)
            s = entry.role_index(Role.SOURCE)
            terms = line.terminals
            if terms[d] > terms[s]:
                swapped = list(terms)
                swapped[d], swapped[s] = terms[s], terms[d]
                line = line.with_terminals(swapped)
        lines.append(line)
    return n.with_lines(lines)


def line_block(line: ComponentLine) -> int:
    """0 for the input block, 1 internal, 2 output. Inputs take precedence."""
    has_output = False
    for net in line.terminals:
        if net.startswith("net_input_"):
            return _INPUT
        if net.startswith("net_output_"):
            has_output = True
    return _OUTPUT if has_output else _INTERNAL


def sort_lines(n: Netlist) -> Netlist:
    return n.with_lines(sorted(n.lines, key=lambda line: (line_block(line), line.body())))


def renumber_internal_nets(n: Netlist) -> Netlist:
    mapping: dict[str, str] = {}
    for line in n.lines:
        for net in line.terminals:
            if net.startswith("net_internal_") and net not in mapping:
                mapping[net] = f"net_internal_{len(mapping)}"
    return rename_nets(n, mapping)


def renumber_components(n: Netlist) -> Netlist:
    return n.with_lines(
        line if line.index == i else line.with_index(i) for i, line in enumerate(n.lines)
    )


def rename_nets(n: Netlist, mapping: dict[str, str]) -> Netlist:
    if all(k == v for k, v in mapping.items()):
        return n
    return n.with_lines(
        line.with_terminals(mapping.get(t, t) for t in line.terminals) for line in n.lines
    )


def normalize_pass(n: Netlist, registry: ModelRegistry) -> Netlist:
    n = sort_device_terminals(n, registry)
    n = sort_lines(n)
    n = renumber_internal_nets(n)
    return renumber_components(n)


def normalize_fixpoint(n: Netlist, registry: ModelRegistry, max_iterations: int = MAX_ITERATIONS) -> Netlist:
    """Apply the four passes until nothing changes (at most ``max_iterations`` times)."""
    previous = n
    current = n
    for _ in range(max_iterations):
        previous, current = current, normalize_pass(current, registry)
        if current == previous:
            return current
    if current != previous:
        msg = f"normalization still changing after {max_iterations} iterations"
        log.warning(msg)
        warnings.warn(NormalizationDiverged(msg), stacklevel=2)
    return current


def normalize(n: Netlist, registry: ModelRegistry) -> Netlist:
    """Canonical form of ``n``; ``normalize(normalize(n)) == normalize(n)``."""
    internals = n.internal_nets()
    if len(internals) < 2 or len(internals) > MAX_RELABEL_NETS:
        return normalize_fixpoint(n, registry)

    best = None
    best_text = None
    seen = set()
    for perm in itertools.permutations(range(len(internals))):
        relabelled = rename_nets(n, {net: f"net_internal_{p}" for net, p in zip(internals, perm)})
        # the first pass makes line order depend only on the labelling
        start = normalize_pass(relabelled, registry)
        if start in seen:
            continue
        seen.add(start)
        candidate = normalize_fixpoint(start, registry)
        text = serialize_netlist(candidate)
        if best_text is None or text < best_text:
            best, best_text = candidate, text
    return best


def is_normalized(n: Netlist, registry: ModelRegistry) -> bool:
    return normalize(n, registry) == n
