"""Run configuration: YAML loading, validation and defaults.

A config names a library task and may override any of its keys::

    task: nand2_fixed
    seed: 3
    budget: 24576
    batch_size: 32
    alpha: 0.3
    beta: 0.1
    zeta: 30            # or eta: 0.01, never both
    normalization: true
    timing: false       # write per-evaluation wall time into evals.csv
    sampler:
      min_components: 3
      checks_after: [CONNECTED_IO, PATHS_IO]
    simulator:          # spice evaluator only
      command: "ngspice -b {{DECK_PATH}}"
      template: testbench.cir
      timeout_s: 60
      max_parallel: 4
      patterns: {gain: "gain\\s*=\\s*(\\S+)"}

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import yaml

from .errors import ConfigError, ConflictingPolicy, EvaluatorUnavailable, MissingFile, SchemaError
from .netlist import PortDecl
from .registry import ModelRegistry, default_registry, entry_from_dict
from .reward import Direction, MetricSpec
from .sampler import CheckKind, SamplerSpec
from .switchsim import DigitalTask, Mode, evaluate
from .tasks import DIGITAL_TASKS, TASKS, task_base

DEFAULTS = {
    "seed": 0,
    "budget": 24576,
    "batch_size": 32,
    "alpha": 0.3,
    "beta": 0.1,
    "normalization": True,
    "timing": False,
}
DEFAULT_ZETA = 30

TOP_KEYS = {
    "task", "seed", "budget", "batch_size", "alpha", "beta", "zeta", "eta",
    "normalization", "timing", "evaluator", "digital_task", "depth_target",
    "sampler", "metrics", "simulator", "models", "name",
}
SAMPLER_KEYS = {
    "components", "inputs", "outputs", "supplies", "ground", "min_components",
    "max_components", "min_internal", "max_internal", "force_bulk",
    "no_gate_to_rail", "sizing", "checks_during", "checks_after",
}
SIMULATOR_KEYS = {"command", "template", "timeout_s", "max_parallel", "patterns"}


@dataclass(frozen=True)
class SimulatorSettings:
    command: str | None
    template: str | None
    patterns: tuple[tuple[str, str], ...]
    timeout_s: float = 60.0
    max_parallel: int = field(default_factory=lambda: os.cpu_count() or 1)


@dataclass(frozen=True)
class RunConfig:
    task: str
    sampler: SamplerSpec
    metrics: tuple[MetricSpec, ...]
    registry: ModelRegistry
    evaluator: str = "builtin"
    digital: DigitalTask | None = None
    simulator: SimulatorSettings | None = None
    seed: int = 0
    budget: int = 24576
    batch_size: int = 32
    alpha: float = 0.3
    beta: float = 0.1
    zeta: int | None = DEFAULT_ZETA
    eta: float | None = None
    normalization: bool = True
    timing: bool = False
    name: str = ""

    @property
    def max_parallel(self) -> int:
        if self.evaluator == "spice" and self.simulator is not None:
            return max(1, self.simulator.max_parallel)
        return 1

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def make_evaluator(self) -> Callable:
        if self.evaluator == "builtin":
            if self.digital is None:
                raise EvaluatorUnavailable("built-in evaluator needs a digital task")
            task, registry = self.digital, self.registry
            return lambda n: evaluate(n, task, registry)
        from .spice import SpiceEvaluator

        sim = self.simulator
        if sim is None or not sim.command or sim.template is None:
            raise EvaluatorUnavailable("spice evaluator needs simulator.command and simulator.template")
        return SpiceEvaluator(sim.template, sim.command, sim.patterns, sim.timeout_s)


LEVEL_HIGH, LEVEL_LOW = 0.9, 0.1


def digital_metrics(task: DigitalTask, depth_target: int | None) -> tuple[MetricSpec, ...]:
    """Correctness (and, for combinational tasks, output level) per step, plus shorts and depth."""
    specs = [MetricSpec(name, Direction.EQUALS, 1.0) for name in task.metric_names()]
    if task.mode is Mode.COMBINATIONAL:
        for i, step in enumerate(task.steps):
            for o, exp in enumerate(step.expected):
                if exp is not None:
                    direction = Direction.AT_LEAST if exp else Direction.AT_MOST
                    specs.append(MetricSpec(f"vout{o}_step{i}", direction, LEVEL_HIGH if exp else LEVEL_LOW))
    n_steps = len(task.steps) + len(task.long_steps)
    specs.append(MetricSpec("shorts", Direction.AT_MOST, 0.0, scale=float(n_steps)))
    if task.mode is Mode.COMBINATIONAL and depth_target is not None:
        specs.append(MetricSpec("depth", Direction.AT_MOST, float(depth_target), scale=2.0))
    return tuple(specs)


def _merge(base: dict, override: Mapping) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict) and k != "components":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _get(d: Mapping, key: str, kind: type, where: str = "", default=None):
    if key not in d or d[key] is None:
        return default
    value = d[key]
    label = f"{where}{key}"
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool):
        raise SchemaError(label, "expected an integer")
    if not isinstance(value, kind):
        raise SchemaError(label, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _unknown(d: Mapping, allowed: set[str], where: str) -> None:
    for key in d:
        if key not in allowed:
            raise SchemaError(f"{where}{key}", "unknown key")


def _sampler(d: Mapping, registry: ModelRegistry) -> SamplerSpec:
    _unknown(d, SAMPLER_KEYS, "sampler.")
    comps = _get(d, "components", dict, "sampler.")
    if not comps:
        raise SchemaError("sampler.components", "at least one model is required")
    for model in comps:
        registry[model]
    sizing = {}
    for model, params in (_get(d, "sizing", dict, "sampler.", {}) or {}).items():
        for key, rng in params.items():
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise SchemaError(f"sampler.sizing.{model}.{key}", "expected [min, max]")
            sizing[(model, key)] = (float(rng[0]), float(rng[1]))

    def checks(key):
        try:
            return frozenset(CheckKind.parse(c) for c in _get(d, key, list, "sampler.", []))
        except ValueError as exc:
            raise SchemaError(f"sampler.{key}", str(exc)) from None

    ports = PortDecl(
        inputs=_get(d, "inputs", int, "sampler.", 0),
        outputs=_get(d, "outputs", int, "sampler.", 0),
        supplies=_get(d, "supplies", int, "sampler.", 0),
        ground=_get(d, "ground", bool, "sampler.", True),
    )
    try:
        return SamplerSpec(
            component_pool=tuple((m, float(w)) for m, w in comps.items()),
            ports=ports,
            min_components=_get(d, "min_components", int, "sampler.", 1),
            max_components=_get(d, "max_components", int, "sampler.", 8),
            min_internal=_get(d, "min_internal", int, "sampler.", 0),
            max_internal=_get(d, "max_internal", int, "sampler.", 2),
            force_bulk=_get(d, "force_bulk", bool, "sampler.", True),
            no_gate_to_rail=_get(d, "no_gate_to_rail", bool, "sampler.", True),
            sizing=sizing,
            checks_during=checks("checks_during"),
            checks_after=checks("checks_after"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise SchemaError("sampler", str(exc)) from None


def _simulator(d: Mapping | None, base_dir: Path) -> SimulatorSettings | None:
    if d is None:
        return None
    _unknown(d, SIMULATOR_KEYS, "simulator.")
    template = None
    template_path = _get(d, "template", str, "simulator.")
    if template_path is not None:
        path = Path(template_path)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise MissingFile(f"testbench template not found: {path}")
        template = path.read_text()
    patterns = _get(d, "patterns", dict, "simulator.", {})
    kwargs = {}
    if "max_parallel" in d:
        kwargs["max_parallel"] = _get(d, "max_parallel", int, "simulator.")
    return SimulatorSettings(
        command=_get(d, "command", str, "simulator."),
        template=template,
        patterns=tuple((str(k), str(v)) for k, v in patterns.items()),
        timeout_s=_get(d, "timeout_s", float, "simulator.", 60.0),
        **kwargs,
    )


def config_from_dict(raw: Mapping[str, Any], base_dir: str | Path = ".") -> RunConfig:
    """Validate a parsed config mapping and merge it over its library task."""
    if not isinstance(raw, Mapping):
        raise SchemaError("<root>", "config must be a mapping")
    _unknown(raw, TOP_KEYS, "")
    task = _get(raw, "task", str)
    if task is None:
        raise SchemaError("task", "missing")
    if task in TASKS:
        merged = _merge(task_base(task), raw)
    else:
        merged = dict(raw)

    if raw.get("zeta") is not None and raw.get("eta") is not None:
        raise ConflictingPolicy("set either eta (relative elite size) or zeta (fixed size), not both")
    eta = _get(merged, "eta", float)
    zeta = None if eta is not None else _get(merged, "zeta", int, default=DEFAULT_ZETA)

    registry = default_registry()
    for name, spec in (_get(merged, "models", dict, default={}) or {}).items():
        try:
            registry = registry.with_entries(entry_from_dict(name, spec))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"models.{name}", str(exc)) from None

    if "sampler" not in merged:
        raise SchemaError("sampler", "missing")
    sampler = _sampler(_get(merged, "sampler", dict), registry)

    evaluator = _get(merged, "evaluator", str, default="builtin")
    if evaluator not in ("builtin", "spice"):
        raise SchemaError("evaluator", f"expected builtin or spice, got {evaluator!r}")

    digital = None
    if evaluator == "builtin":
        dname = _get(merged, "digital_task", str)
        if dname not in DIGITAL_TASKS:
            raise SchemaError("digital_task", f"unknown digital task {dname!r}")
        digital = DIGITAL_TASKS[dname]
        if (digital.inputs, digital.outputs) != (sampler.ports.inputs, sampler.ports.outputs):
            raise SchemaError("sampler", f"port counts do not match digital task {dname!r}")

    if merged.get("metrics"):
        try:
            metrics = tuple(MetricSpec.from_dict(m) for m in merged["metrics"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError("metrics", str(exc)) from None
    elif digital is not None:
        metrics = digital_metrics(digital, _get(merged, "depth_target", int))
    else:
        raise SchemaError("metrics", "required for the spice evaluator")

    simulator = _simulator(_get(merged, "simulator", dict), Path(base_dir))

    values = {k: _get(merged, k, type(v) if not isinstance(v, float) else float, default=v)
              for k, v in DEFAULTS.items()}
    if values["budget"] < 1:
        raise SchemaError("budget", "must be at least 1")
    if values["batch_size"] < 1:
        raise SchemaError("batch_size", "must be at least 1")
    if not 0 <= values["alpha"] <= 1:
        raise SchemaError("alpha", "must be in [0, 1]")
    if values["beta"] < 0:
        raise SchemaError("beta", "must be non-negative")
    if eta is not None and not 0 < eta < 1:
        raise SchemaError("eta", "must be in (0, 1)")
    if zeta is not None and zeta < 1:
        raise SchemaError("zeta", "must be positive")

    return RunConfig(
        task=task,
        sampler=sampler,
        metrics=metrics,
        registry=registry,
        evaluator=evaluator,
        digital=digital,
        simulator=simulator,
        zeta=zeta,
        eta=eta,
        name=_get(merged, "name", str, default=task),
        **values,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw or {}, path.parent)


def task_config(task: str, **overrides) -> RunConfig:
    """Config for a library task with top-level overrides (library entry point)."""
    if task not in TASKS:
        raise SchemaError("task", f"unknown task {task!r}")
    return config_from_dict({"task": task, **overrides})
