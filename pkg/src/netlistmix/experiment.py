"""Multi-seed experiment matrix, summary statistics and run-log emission."""

from __future__ import annotations

import csv
import itertools
import json
import statistics
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from .config import RunConfig, config_from_dict
from .engine import ORIGINS, RunReport, run_synthesis
from .errors import ConfigError, MissingFile, SchemaError

EVALS_HEADER = ("eval_index", "origin", "reward", "netlist_len", "elapsed_ms")
ELITES_HEADER = ("eval_index", "random", "crossover", "mutation", "pruning")
ROWS_HEADER = ("config_id", "seed", "success", "evaluations", "best_reward", "wall_time_s", "error")


@dataclass(frozen=True)
class RunRow:
    config_id: str
    seed: int
    success: bool
    evaluations: int
    best_reward: float
    wall_time_s: float
    error: str = ""


@dataclass(frozen=True)
class ConfigSummary:
    config_id: str
    runs: int
    successes: int
    failure_rate_pct: float
    median_success: float | None
    median_all: float | None


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[RunRow, ...]
    summaries: tuple[ConfigSummary, ...]


def summarize(config_id: str, rows: Sequence[RunRow], budget: int) -> ConfigSummary:
    """Median evaluations over successes and over all runs (failures count at budget)."""
    ok = [r.evaluations for r in rows if r.success]
    counted = [r.evaluations if r.success else budget for r in rows if not r.error]
    return ConfigSummary(
        config_id=config_id,
        runs=len(rows),
        successes=len(ok),
        failure_rate_pct=100.0 * (len(rows) - len(ok)) / len(rows) if rows else 0.0,
        median_success=float(statistics.median(ok)) if ok else None,
        median_all=float(statistics.median(counted)) if counted else None,
    )


def config_id(cfg: RunConfig) -> str:
    return cfg.name or cfg.task


def run_experiment(
    configs: Sequence[RunConfig],
    repeats: int,
    log_dir: str | Path | None = None,
) -> SummaryTable:
    """Run every config ``repeats`` times with seeds ``cfg.seed + r``.

    A run that raises is recorded as a failed row carrying the error text;
    the rest of the matrix still runs.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    ids = [config_id(c) for c in configs]
    if len(set(ids)) != len(ids):
        ids = [f"{x}#{i}" for i, x in enumerate(ids)]
    rows: list[RunRow] = []
    summaries = []
    for cid, cfg in zip(ids, configs):
        cfg_rows = []
        for r in range(repeats):
            seed = cfg.seed + r
            started = time.perf_counter()
            try:
                report = run_synthesis(cfg.with_(seed=seed))
            except Exception as exc:  # recorded, never aborts the matrix
                row = RunRow(cid, seed, False, 0, -1.0, time.perf_counter() - started,
                             f"{type(exc).__name__}: {exc}")
            else:
                row = RunRow(cid, seed, report.success, report.evaluations, report.best_reward,
                             report.wall_time_s)
                if log_dir is not None:
                    emit_logs(report, Path(log_dir) / _safe(cid) / f"seed{seed}")
            cfg_rows.append(row)
        rows.extend(cfg_rows)
        summaries.append(summarize(cid, cfg_rows, cfg.budget))
    table = SummaryTable(tuple(rows), tuple(summaries))
    if log_dir is not None:
        write_summary_table(table, log_dir)
    return table


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def emit_logs(report: RunReport, directory: str | Path) -> None:
    """Write evals.csv, elites.csv, best.netlist and summary.json into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "evals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVALS_HEADER)
        for rec in report.records:
            ms = "" if rec.elapsed_ms is None else f"{rec.elapsed_ms:.3f}"
            w.writerow((rec.eval_index, rec.origin.value, repr(rec.reward), rec.netlist_len, ms))
    with open(out / "elites.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ELITES_HEADER)
        for rec, counts in zip(report.records, report.elite_counts):
            w.writerow((rec.eval_index, *counts))
    (out / "best.netlist").write_text(report.best_netlist + "\n" if report.best_netlist else "")
    summary = {
        "task": report.task,
        "seed": report.seed,
        "success": report.success,
        "evaluations": report.evaluations,
        "best_reward": report.best_reward,
        "wall_time_s": round(report.wall_time_s, 3),
        "final_elite_counts": dict(zip((o.value for o in ORIGINS),
                                       report.elite_counts[-1] if report.elite_counts else (0,) * 4)),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def write_summary_table(table: SummaryTable, directory: str | Path) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROWS_HEADER)
        for r in table.rows:
            w.writerow((r.config_id, r.seed, int(r.success), r.evaluations, repr(r.best_reward),
                        f"{r.wall_time_s:.3f}", r.error))
    (out / "summary.json").write_text(
        json.dumps([asdict(s) for s in table.summaries], indent=2) + "\n")


def expand_matrix(raw: Mapping[str, Any]) -> list[dict]:
    """Expand a sweep file into plain config mappings.

    ``base`` is merged under every entry; ``grid`` maps top-level keys to value
    lists and contributes their Cartesian product; ``configs`` lists explicit
    entries. Without ``grid`` or ``configs`` the base alone is one config.
    """
    if not isinstance(raw, Mapping):
        raise SchemaError("<root>", "sweep file must be a mapping")
    for key in raw:
        if key not in ("base", "grid", "configs"):
            raise SchemaError(key, "unknown sweep key")
    base = dict(raw.get("base") or {})
    entries: list[dict] = []
    grid = raw.get("grid") or {}
    if not isinstance(grid, Mapping):
        raise SchemaError("grid", "expected a mapping of key to value list")
    if grid:
        keys = list(grid)
        for k in keys:
            if not isinstance(grid[k], list) or not grid[k]:
                raise SchemaError(f"grid.{k}", "expected a non-empty list")
        for combo in itertools.product(*(grid[k] for k in keys)):
            point = dict(zip(keys, combo))
            name = ",".join(f"{k}={v}" for k, v in point.items())
            entries.append({**base, "name": name, **point})
    configs = raw.get("configs") or []
    if not isinstance(configs, list):
        raise SchemaError("configs", "expected a list")
    for i, entry in enumerate(configs):
        if not isinstance(entry, Mapping):
            raise SchemaError(f"configs[{i}]", "expected a mapping")
        entries.append({**base, **entry})
    if not entries:
        entries.append(base)
    return entries


def load_matrix(path: str | Path) -> list[RunConfig]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"sweep file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return [config_from_dict(entry, path.parent) for entry in expand_matrix(raw or {})]
