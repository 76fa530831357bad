"""Scalar fitness in [-1, 1]: mean of per-metric quadratic, saturating scores."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyComponentList

Measurements = Mapping[str, "float | None"]


class Direction(str, enum.Enum):
    AT_MOST = "AT_MOST"
    AT_LEAST = "AT_LEAST"
    EQUALS = "EQUALS"
    MINIMIZE = "MINIMIZE"


@dataclass(frozen=True)
class MetricSpec:
    name: str
    direction: Direction
    target: float | None = None
    scale: float = 1.0
    saturating: bool = True

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"{self.name}: scale must be positive")
        if self.direction is Direction.MINIMIZE:
            if self.saturating:
                raise ValueError(f"{self.name}: MINIMIZE metrics cannot saturate")
        elif self.target is None:
            raise ValueError(f"{self.name}: {self.direction.value} needs a target")

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricSpec":
        direction = Direction(str(d["direction"]).upper())
        return cls(
            name=d["name"],
            direction=direction,
            target=None if d.get("target") is None else float(d["target"]),
            scale=float(d.get("scale", 1.0)),
            saturating=bool(d.get("saturating", direction is not Direction.MINIMIZE)),
        )


@dataclass(frozen=True)
class RewardReport:
    components: tuple[float, ...]
    reward: float
    valid: bool


def _clamp(x: float) -> float:
    return max(-1.0, min(1.0, x))


def violation(measured: float, spec: MetricSpec) -> float:
    if spec.direction is Direction.AT_MOST:
        return max(0.0, measured - spec.target)
    if spec.direction is Direction.AT_LEAST:
        return max(0.0, spec.target - measured)
    if spec.direction is Direction.EQUALS:
        return abs(measured - spec.target)
    return max(0.0, measured)


def component_reward(measured: float | None, spec: MetricSpec) -> float:
    """Score one metric; a missing or non-finite measurement scores -1."""
    if measured is None or not math.isfinite(measured):
        return -1.0
    if spec.direction is Direction.MINIMIZE:
        return _clamp(1.0 - (measured / spec.scale) ** 2)
    v = violation(measured, spec)
    if v == 0:
        return 1.0
    return _clamp(1.0 - (v / spec.scale) ** 2)


def aggregate(components: Sequence[float], saturating: Sequence[bool] | None = None) -> RewardReport:
    if not components:
        raise EmptyComponentList("reward needs at least one component")
    if saturating is None:
        saturating = [True] * len(components)
    r = sum(components) / len(components)
    valid = all(c == 1.0 for c, sat in zip(components, saturating) if sat)
    return RewardReport(tuple(components), r, valid)


def score(measurements: Measurements, specs: Sequence[MetricSpec]) -> RewardReport:
    comps = [component_reward(measurements.get(s.name), s) for s in specs]
    return aggregate(comps, [s.saturating for s in specs])
