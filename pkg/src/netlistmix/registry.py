"""Device model registry: arity, terminal roles, sizing schema."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import UnknownModel


class DeviceClass(str, Enum):
    NMOS = "NMOS"
    PMOS = "PMOS"
    SUBCIRCUIT = "SUBCIRCUIT"


class Role(str, Enum):
    DRAIN = "DRAIN"
    GATE = "GATE"
    SOURCE = "SOURCE"
    BULK = "BULK"
    IN = "IN"
    OUT = "OUT"
    CLK = "CLK"
    GENERIC = "GENERIC"


MOS_ROLES = (Role.DRAIN, Role.GATE, Role.SOURCE, Role.BULK)


@dataclass(frozen=True)
class ParamRange:
    key: str
    min: float
    max: float
    unit: str = ""

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"param {self.key}: min {self.min} > max {self.max}")


@dataclass(frozen=True)
class ModelEntry:
    name: str
    roles: tuple[Role, ...]
    device_class: DeviceClass = DeviceClass.SUBCIRCUIT
    params: tuple[ParamRange, ...] = ()
    prefix: str = "X"
    # gate semantics for the sequential evaluator ("INV", "TRIINV")
    logic: str | None = None

    def __post_init__(self):
        if self.device_class in (DeviceClass.NMOS, DeviceClass.PMOS) and self.roles != MOS_ROLES:
            raise ValueError(f"{self.name}: MOS models need roles (DRAIN, GATE, SOURCE, BULK)")

    @property
    def arity(self) -> int:
        return len(self.roles)

    @property
    def is_mos(self) -> bool:
        return self.device_class in (DeviceClass.NMOS, DeviceClass.PMOS)

    def role_index(self, role: Role) -> int:
        return self.roles.index(role)


@dataclass(frozen=True)
class ModelRegistry:
    entries: dict[str, ModelEntry] = field(default_factory=dict)

    def __getitem__(self, name: str) -> ModelEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownModel(f"unknown model {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __hash__(self):
        return hash(tuple(sorted(self.entries)))

    def with_entries(self, *extra: ModelEntry) -> "ModelRegistry":
        merged = dict(self.entries)
        merged.update({e.name: e for e in extra})
        return ModelRegistry(merged)

    @classmethod
    def of(cls, *entries: ModelEntry) -> "ModelRegistry":
        return cls({e.name: e for e in entries})


NFET = "sky130_fd_pr__nfet_01v8"
PFET = "sky130_fd_pr__pfet_01v8"
INV = "sky130_fd_pr__inv_01v8"
TRIINV = "sky130_fd_pr__invck_01v8"

_W = ParamRange("w", 0.42, 100.0, "u")
_L = ParamRange("l", 0.15, 100.0, "u")


def default_registry() -> ModelRegistry:
    """Skywater-style device names used by the shipped tasks.

    Terminal order for the 4-terminal MOS devices is assumed to be
    drain, gate, source, bulk.
    """
    return ModelRegistry.of(
        ModelEntry(NFET, MOS_ROLES, DeviceClass.NMOS, (_W, _L)),
        ModelEntry(PFET, MOS_ROLES, DeviceClass.PMOS, (_W, _L)),
        ModelEntry(INV, (Role.IN, Role.OUT), params=(ParamRange("w", 6, 6, "u"), ParamRange("l", 0.15, 0.15, "u")),
                   logic="INV"),
        ModelEntry(TRIINV, (Role.IN, Role.CLK, Role.OUT),
                   params=(ParamRange("w", 6, 6, "u"), ParamRange("l", 0.15, 0.15, "u")), logic="TRIINV"),
        # differential pairs: in+, in-, out+, out-, tail rail
        ModelEntry("sky130_fd_pr__ndip_01v8", (Role.IN, Role.IN, Role.OUT, Role.OUT, Role.GENERIC),
                   params=(_W, _L, ParamRange("ibias", 1, 100, "u"))),
        ModelEntry("sky130_fd_pr__pdip_01v8", (Role.IN, Role.IN, Role.OUT, Role.OUT, Role.GENERIC),
                   params=(_W, _L, ParamRange("ibias", 1, 100, "u"))),
        # current mirrors: reference, mirrored output, rail
        ModelEntry("sky130_fd_pr__ncum_01v8", (Role.GENERIC, Role.OUT, Role.GENERIC),
                   params=(ParamRange("w1", 0.42, 100, "u"), ParamRange("w2", 0.42, 100, "u"), _L)),
        ModelEntry("sky130_fd_pr__pcum_01v8", (Role.GENERIC, Role.OUT, Role.GENERIC),
                   params=(ParamRange("w1", 0.42, 100, "u"), ParamRange("w2", 0.42, 100, "u"), _L)),
    )


def entry_from_dict(name: str, spec: dict) -> ModelEntry:
    """Build a registry entry from a config mapping."""
    roles = tuple(Role(r.upper()) for r in spec["roles"])
    params = tuple(
        ParamRange(key, float(rng[0]), float(rng[1]), rng[2] if len(rng) > 2 else "")
        for key, rng in (spec.get("params") or {}).items()
    )
    return ModelEntry(
        name,
        roles,
        DeviceClass(spec.get("device_class", "SUBCIRCUIT").upper()),
        params,
        spec.get("prefix", "X"),
        spec.get("logic"),
    )
