"""Genetic search loop: elite archive, parent selection, offspring generation, evaluation."""

from __future__ import annotations

import bisect
import enum
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

from .errors import EmptyEliteSet, EvaluatorUnavailable, SamplingExhausted, SpawnFailure, UnsupportedModel
from .genops import MixBias, PruneRate, mix_netlists, prune_netlist
from .netlist import Netlist, serialize_netlist
from .normalize import normalize, renumber_components
from .reward import RewardReport, score
from .sampler import check_all, sample_random_netlist

if TYPE_CHECKING:
    from .config import RunConfig

MAX_AFTER_CHECK_ATTEMPTS = 100
MAX_SAMPLE_RESTARTS = 100


class Origin(str, enum.Enum):
    RANDOM = "RANDOM"
    CROSSOVER = "CROSSOVER"
    MUTATION = "MUTATION"
    PRUNING = "PRUNING"


ORIGINS = (Origin.RANDOM, Origin.CROSSOVER, Origin.MUTATION, Origin.PRUNING)
STRATEGIES = (Origin.CROSSOVER, Origin.MUTATION, Origin.PRUNING)


@dataclass(frozen=True)
class EliteEntry:
    netlist: Netlist
    text: str
    reward: float
    origin: Origin
    eval_index: int

    @property
    def sort_key(self) -> tuple[float, int]:
        return (-self.reward, self.eval_index)


class EliteSet:
    """Reward-sorted, duplicate-free archive of the best netlists.

    Exactly one of ``zeta`` (fixed size) or ``eta`` (fraction of evaluations
    so far, at least 2) bounds the set. Under the relative policy the full
    archive is kept, since the bound grows with the evaluation count.
    """

    def __init__(self, zeta: int | None = None, eta: float | None = None):
        if (zeta is None) == (eta is None):
            raise ValueError("exactly one of zeta and eta must be set")
        if zeta is not None and zeta < 1:
            raise ValueError("zeta must be positive")
        if eta is not None and not 0 < eta < 1:
            raise ValueError("eta must be in (0, 1)")
        self.zeta = zeta
        self.eta = eta
        self._entries: list[EliteEntry] = []
        self._keys: list[tuple[float, int]] = []
        self._texts: set[str] = set()

    def bound(self, n_evals: int) -> int:
        if self.zeta is not None:
            return self.zeta
        return max(2, int(n_evals * self.eta))

    def available(self, n_evals: int) -> bool:
        """Whether genetic operators may run yet (otherwise offspring are random)."""
        if not self._entries:
            return False
        if self.zeta is not None:
            return n_evals >= self.zeta
        return n_evals * self.eta >= 2

    def insert(self, entry: EliteEntry) -> bool:
        if entry.text in self._texts:
            return False
        pos = bisect.bisect_right(self._keys, entry.sort_key)
        if self.zeta is not None and pos >= self.zeta:
            return False
        self._entries.insert(pos, entry)
        self._keys.insert(pos, entry.sort_key)
        self._texts.add(entry.text)
        if self.zeta is not None and len(self._entries) > self.zeta:
            dropped = self._entries.pop()
            self._keys.pop()
            self._texts.discard(dropped.text)
        return True

    def entries(self, n_evals: int) -> list[EliteEntry]:
        return self._entries[: self.bound(n_evals)]

    def origin_counts(self, n_evals: int) -> tuple[int, int, int, int]:
        counts = dict.fromkeys(ORIGINS, 0)
        for e in self.entries(n_evals):
            counts[e.origin] += 1
        return tuple(counts[o] for o in ORIGINS)

    def __len__(self) -> int:
        return len(self._entries)


def roulette_select(ranks: Sequence[float], n: int, rng: random.Random) -> list[int]:
    """Draw ``n`` indices with replacement, P(i) proportional to ``ranks[i]``."""
    if not ranks:
        raise EmptyEliteSet("cannot select from an empty elite set")
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.choices(range(len(ranks)), weights=ranks, k=n)


def select_parents(elites: Sequence[EliteEntry], n: int, rng: random.Random) -> list[Netlist]:
    m = len(elites)
    return [elites[i].netlist for i in roulette_select(range(m, 0, -1), n, rng)]


def canonicalizer(cfg: "RunConfig") -> Callable[[Netlist], Netlist]:
    if cfg.normalization:
        return lambda n: normalize(n, cfg.registry)
    return renumber_components


def _random(cfg: "RunConfig", rng: random.Random) -> Netlist:
    # a dead-end partial netlist is abandoned and drawn again from scratch
    for _ in range(MAX_SAMPLE_RESTARTS - 1):
        try:
            return sample_random_netlist(cfg.sampler, rng, cfg.registry, normalized=False)
        except SamplingExhausted:
            continue
    return sample_random_netlist(cfg.sampler, rng, cfg.registry, normalized=False)


def _draw(elites: Sequence[EliteEntry], cfg: "RunConfig", rng: random.Random) -> tuple[Netlist, Origin]:
    canon = canonicalizer(cfg)
    if not elites:
        return canon(_random(cfg, rng)), Origin.RANDOM
    strategy = rng.choice(STRATEGIES)
    if strategy is Origin.CROSSOVER:
        a, b = select_parents(elites, 2, rng)
        child = mix_netlists(a, b, MixBias.crossover(), rng)
    elif strategy is Origin.MUTATION:
        (elite,) = select_parents(elites, 1, rng)
        child = mix_netlists(canon(_random(cfg, rng)), elite, MixBias(cfg.alpha), rng)
    else:
        (elite,) = select_parents(elites, 1, rng)
        child = prune_netlist(elite, cfg.sampler.force_bulk, PruneRate(cfg.beta), rng, cfg.registry, canon)
    if len(child) == 0:
        return canon(_random(cfg, rng)), Origin.RANDOM
    return canon(child), strategy


def generate_offspring(
    elites: Sequence[EliteEntry], cfg: "RunConfig", rng: random.Random
) -> tuple[Netlist, Origin]:
    """One candidate from the current elites; random when ``elites`` is empty.

    Candidates failing the after-generation checks are redrawn; after 100
    failures a random sample is returned unchecked.
    """
    checks = cfg.sampler.checks_after
    for _ in range(MAX_AFTER_CHECK_ATTEMPTS):
        n, origin = _draw(elites, cfg, rng)
        if check_all(checks, n):
            return n, origin
    return canonicalizer(cfg)(_random(cfg, rng)), Origin.RANDOM


def offspring_rng(seed: int, eval_index: int) -> random.Random:
    """Independent stream per evaluation so batch order cannot matter."""
    return random.Random(f"{seed}/{eval_index}")


@dataclass(frozen=True)
class EvalRecord:
    eval_index: int
    origin: Origin
    reward: float
    netlist_len: int
    netlist: str
    elapsed_ms: float | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RunReport:
    task: str
    seed: int
    success: bool
    evaluations: int
    best_reward: float
    best_netlist: str
    records: tuple[EvalRecord, ...]
    elite_counts: tuple[tuple[int, int, int, int], ...]
    wall_time_s: float = field(default=0.0, compare=False)


class _Scorer:
    """Evaluator plus reward, memoized on the serialized netlist."""

    def __init__(self, cfg: "RunConfig"):
        self.cfg = cfg
        self.evaluate = cfg.make_evaluator()
        self.cache: dict[str, RewardReport] = {}

    def __call__(self, n: Netlist, text: str) -> RewardReport:
        hit = self.cache.get(text)
        if hit is not None:
            return hit
        try:
            measurements = self.evaluate(n)
        except UnsupportedModel:
            measurements = {}
        except SpawnFailure as exc:
            raise EvaluatorUnavailable(str(exc)) from exc
        report = score(measurements, self.cfg.metrics)
        self.cache[text] = report
        return report


def run_synthesis(cfg: "RunConfig") -> RunReport:
    """Search until a candidate scores reward 1 or the budget is spent."""
    started = time.perf_counter()
    scorer = _Scorer(cfg)
    elites = EliteSet(zeta=cfg.zeta, eta=cfg.eta)
    records: list[EvalRecord] = []
    counts: list[tuple[int, int, int, int]] = []
    best: EliteEntry | None = None
    success = False
    pool = ThreadPoolExecutor(cfg.max_parallel) if cfg.max_parallel > 1 else None

    try:
        n_evals = 0
        while n_evals < cfg.budget and not success:
            batch_end = min(cfg.budget, n_evals + cfg.batch_size)
            parents = elites.entries(n_evals) if elites.available(n_evals) else []
            candidates = []
            for k in range(n_evals, batch_end):
                n, origin = generate_offspring(parents, cfg, offspring_rng(cfg.seed, k))
                candidates.append((k, n, origin, serialize_netlist(n)))

            def run_one(item):
                t0 = time.perf_counter()
                rep = scorer(item[1], item[3])
                return rep, (time.perf_counter() - t0) * 1e3

            results = list(pool.map(run_one, candidates)) if pool else [run_one(c) for c in candidates]

            for (k, n, origin, text), (rep, ms) in zip(candidates, results):
                entry = EliteEntry(n, text, rep.reward, origin, k)
                elites.insert(entry)
                if best is None or entry.sort_key < best.sort_key:
                    best = entry
                n_evals = k + 1
                records.append(EvalRecord(k, origin, rep.reward, len(n), text, ms if cfg.timing else None))
                counts.append(elites.origin_counts(n_evals))
                if rep.reward == 1.0:
                    success = True
                    break
    finally:
        if pool:
            pool.shutdown()

    return RunReport(
        task=cfg.task,
        seed=cfg.seed,
        success=success,
        evaluations=len(records),
        best_reward=best.reward if best else -1.0,
        best_netlist=best.text if best else "",
        records=tuple(records),
        elite_counts=tuple(counts),
        wall_time_s=time.perf_counter() - started,
    )
