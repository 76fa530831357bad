"""Netlist-level genetic operators: line mixing, component mixing, pruning."""

from __future__ import annotations

import enum
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ElementCountMismatch, InvalidMix, NetlistError
from .netlist import ComponentLine, Netlist, parse_line
from .normalize import normalize, renumber_components
from .registry import ModelRegistry, Role


class Action(enum.Enum):
    FIRST = "first"
    SECOND = "second"
    BOTH = "both"
    NONE = "none"


ACTIONS = (Action.FIRST, Action.SECOND, Action.BOTH, Action.NONE)


@dataclass(frozen=True)
class MixBias:
    """Action distribution for :func:`mix_netlists`.

    ``alpha`` is the expected fraction of positions that do not copy the
    second (favored) parent's line. ``uniform=True`` ignores it and gives each
    of the four actions probability 1/4.
    """

    alpha: float = 0.3
    uniform: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    @classmethod
    def crossover(cls) -> "MixBias":
        return cls(uniform=True)

    @property
    def weights(self) -> tuple[float, float, float, float]:
        """Probabilities aligned with :data:`ACTIONS`."""
        if self.uniform:
            return (0.25, 0.25, 0.25, 0.25)
        a = self.alpha / 3.0
        return (a, 1.0 - self.alpha, a, a)


@dataclass(frozen=True)
class PruneRate:
    beta: float = 0.1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    def steps(self, n_lines: int) -> int:
        return 1 + int(self.beta * n_lines)


def draw_actions(n: int, bias: MixBias, rng: random.Random) -> list[Action]:
    return rng.choices(ACTIONS, weights=bias.weights, k=n)


def apply_actions(first: Netlist, second: Netlist, actions: Sequence[Action]) -> Netlist:
    """Assemble an offspring from per-position actions, then renumber components."""
    out: list[ComponentLine] = []
    for i, action in enumerate(actions):
        line1 = first.lines[i] if i < len(first.lines) else None
        line2 = second.lines[i] if i < len(second.lines) else None
        if action in (Action.FIRST, Action.BOTH) and line1 is not None:
            out.append(line1)
        if action in (Action.SECOND, Action.BOTH) and line2 is not None:
            out.append(line2)
    return renumber_components(Netlist(tuple(out), second.ports))


def mix_netlists(first: Netlist, second: Netlist, bias: MixBias, rng: random.Random) -> Netlist:
    """Line-mixing crossover (uniform bias) or mutation (biased toward ``second``).

    The result has its components renumbered but is otherwise left
    un-normalized.
    """
    n = max(len(first), len(second))
    return apply_actions(first, second, draw_actions(n, bias, rng))


def _fusable(line: ComponentLine, registry: ModelRegistry) -> bool:
    entry = registry[line.model]
    return entry.is_mos and entry.roles[-1] is Role.BULK


def _mix_tokens(line: ComponentLine, fuse: bool) -> list[str]:
    tokens = line.tokens()[1:]
    if fuse:
        # bulk net and model name travel together
        n_terms = len(line.terminals)
        tokens = tokens[: n_terms - 1] + [tokens[n_terms - 1] + "#" + tokens[n_terms]] + tokens[n_terms + 1:]
    return tokens


def mix_components(
    line1: ComponentLine,
    line2: ComponentLine,
    force_bulk: bool,
    rng: random.Random,
    registry: ModelRegistry,
    picks: Sequence[bool] | None = None,
) -> ComponentLine:
    """Mix two equal-length component lines element by element.

    Each element after the identifier comes from ``line1`` or ``line2`` with
    probability 1/2. ``picks`` overrides the draw (True selects ``line2``).
    With ``force_bulk`` and two MOS lines, the bulk net and model name are
    treated as a single element so a device never gets the other device's
    bulk rail. The identifier is kept from ``line1``.
    """
    if line1.element_count != line2.element_count:
        raise ElementCountMismatch(
            f"{line1.ident} has {line1.element_count} elements, {line2.ident} has {line2.element_count}"
        )
    fuse = force_bulk and _fusable(line1, registry) and _fusable(line2, registry)
    tokens1 = _mix_tokens(line1, fuse)
    tokens2 = _mix_tokens(line2, fuse)
    if picks is None:
        picks = [rng.random() < 0.5 for _ in tokens1]
    elif len(picks) != len(tokens1):
        raise ValueError(f"expected {len(tokens1)} picks, got {len(picks)}")
    mixed = [b if take_second else a for a, b, take_second in zip(tokens1, tokens2, picks)]
    if fuse:
        mixed = [part for tok in mixed for part in tok.split("#")]
    try:
        return parse_line([line1.ident, *mixed], registry)
    except NetlistError as exc:
        raise InvalidMix(str(exc)) from None


def prune_netlist(
    n: Netlist,
    force_bulk: bool,
    rate: PruneRate,
    rng: random.Random,
    registry: ModelRegistry,
    canonicalize: Callable[[Netlist], Netlist] | None = None,
) -> Netlist:
    """Replace pairs of same-length lines by one mixed line, ``1 + floor(beta * L)`` times.

    Returns an empty netlist as soon as no two lines share an element count
    (or a mix comes out unparseable); the caller substitutes a random sample.
    ``canonicalize`` runs after every step and defaults to full
    normalization.
    """
    if canonicalize is None:
        canonicalize = lambda net: normalize(net, registry)  # noqa: E731
    lines = list(n.lines)
    for _ in range(rate.steps(len(lines))):
        groups: dict[int, list[int]] = defaultdict(list)
        for i, line in enumerate(lines):
            groups[line.element_count].append(i)
        mixable = [groups[k] for k in sorted(groups) if len(groups[k]) > 1]
        if not mixable:
            return n.with_lines(())
        i, j = rng.sample(rng.choice(mixable), 2)
        try:
            lines[i] = mix_components(lines[i], lines[j], force_bulk, rng, registry)
        except InvalidMix:
            return n.with_lines(())
        del lines[j]
        n = canonicalize(n.with_lines(lines))
        lines = list(n.lines)
    return n
