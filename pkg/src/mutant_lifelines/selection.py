"""Mutant-selection simulation over a timeline.

A selection is drawn at the origin version, then followed forward: at
each later version the selected mutants that still stand are scored
against that version's kill matrix and compared with a reference score.

Randomness comes from one substream per (seed, repetition), so a
repetition's outcome does not depend on scheduling or on the strategy
(the same repetition draws the same sample fraction under every
strategy, which makes strategies directly comparable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivisionByZeroRelevance, EmptyPool, EmptySubset
from .lifeline import resample_step, thread_mutants
from .model import MutantId, Timeline
from .parallel import ordered_map
from .subsumption import mutation_score, subsuming_set

STRATEGIES = ("random", "optimal", "worst_case")
POOLS = ("all_mutants", "subsuming_only")
REFERENCES = ("fresh", "frozen")


@dataclass(frozen=True)
class SelectionConfig:
    fraction_range: tuple[float, float] = (0.10, 0.30)
    repetitions: int = 100
    seed: int = 0
    strategy: str = "random"
    pool: str = "all_mutants"
    # "fresh": compare with the full pool existing at each version;
    # "frozen": compare with the selection's own score at the origin.
    reference: str = "fresh"
    origin: int = 0

    def __post_init__(self) -> None:
        low, high = self.fraction_range
        if not 0 < low <= high <= 1:
            raise ValueError(f"fraction range must satisfy 0 < low <= high <= 1, got {self.fraction_range}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.pool not in POOLS:
            raise ValueError(f"unknown pool {self.pool!r}")
        if self.reference not in REFERENCES:
            raise ValueError(f"unknown reference mode {self.reference!r}")
        object.__setattr__(self, "fraction_range", (float(low), float(high)))


@dataclass
class SimContext:
    """Per-(timeline, origin, pool) data shared by every repetition."""

    timeline: Timeline
    origin: int
    pool_kind: str
    pool: tuple[MutantId, ...]  # sorted ids
    spans: np.ndarray  # standing span per pool member
    rows: np.ndarray  # (versions, pool) kill-matrix row per member, -1 once gone
    killed: list[np.ndarray]  # per version: row killed by some test
    fresh_reference: np.ndarray  # per version; nan where the pool is empty

    @property
    def length(self) -> int:
        return len(self.timeline.points) - self.origin


def prepare(timeline: Timeline, origin: int = 0, pool: str = "all_mutants") -> SimContext:
    points = timeline.points[origin:]
    lifelines = thread_mutants(timeline, origin)
    if pool == "subsuming_only":
        reps = set(subsuming_set(points[0].kills).representatives)
        lifelines = [lf for lf in lifelines if lf.origin[1] in reps]
    elif pool != "all_mutants":
        raise ValueError(f"unknown pool {pool!r}")
    lifelines = sorted(lifelines, key=lambda lf: lf.origin[1])

    rows = np.full((len(points), len(lifelines)), -1, dtype=np.int64)
    for j, lf in enumerate(lifelines):
        for t in range(lf.standing_span):
            rows[t, j] = points[t].kills.row_of[lf.at(origin + t)]

    reference = np.empty(len(points))
    for t, tp in enumerate(points):
        if pool == "all_mutants":
            members = tp.kills.mutant_ids
        else:
            members = subsuming_set(tp.kills).representatives
        try:
            reference[t] = mutation_score(tp.kills, members)
        except EmptySubset:
            reference[t] = np.nan

    return SimContext(
        timeline=timeline,
        origin=origin,
        pool_kind=pool,
        pool=tuple(lf.origin[1] for lf in lifelines),
        spans=np.array([lf.standing_span for lf in lifelines], dtype=np.int64),
        rows=rows,
        killed=[tp.kills.killed for tp in points],
        fresh_reference=reference,
    )


def _substream(seed: int, repetition: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), repetition]))


def _select_indices(ctx: SimContext, cfg: SelectionConfig, repetition: int) -> tuple[float, np.ndarray]:
    size = len(ctx.pool)
    if not size:
        raise EmptyPool(f"{ctx.timeline.file}: no mutants in the {ctx.pool_kind} pool")
    rng = _substream(cfg.seed, repetition)
    low, high = cfg.fraction_range
    fraction = float(rng.uniform(low, high)) if high > low else low
    k = min(size, max(1, round(fraction * size)))
    if cfg.strategy == "random":
        picked = rng.choice(size, size=k, replace=False)
    elif cfg.strategy == "optimal":
        # pool is id-sorted, so a stable sort breaks span ties by id
        picked = np.argsort(-ctx.spans, kind="stable")[:k]
    else:
        picked = np.argsort(ctx.spans, kind="stable")[:k]
    return fraction, np.sort(picked)


def select(
    timeline: Timeline, cfg: SelectionConfig, repetition: int, context: SimContext | None = None
) -> tuple[MutantId, ...]:
    """Ids selected for ``repetition``, in id order."""
    ctx = context or prepare(timeline, cfg.origin, cfg.pool)
    _, picked = _select_indices(ctx, cfg, repetition)
    return tuple(ctx.pool[i] for i in picked)


@dataclass(frozen=True)
class Repetition:
    repetition: int
    fraction: float
    selected: tuple[MutantId, ...]
    survival_curve: tuple[float, ...]
    survivors: tuple[int, ...]
    # Cut at the first version where no selected mutant stands.
    ms_series: tuple[float, ...]
    reference_ms_series: tuple[float, ...]
    truncated_at: int | None
    mse: float


@dataclass(frozen=True)
class SimulationResult:
    config: SelectionConfig
    file: str
    version_ids: tuple[str, ...]
    repetitions: tuple[Repetition, ...]

    @property
    def mse_values(self) -> np.ndarray:
        return np.array([r.mse for r in self.repetitions])

    @property
    def survival_matrix(self) -> np.ndarray:
        return np.array([r.survival_curve for r in self.repetitions])

    def envelope(self) -> dict[str, list[float]]:
        s = self.survival_matrix
        return {"mean": s.mean(axis=0).tolist(), "min": s.min(axis=0).tolist(), "max": s.max(axis=0).tolist()}

    def mse_summary(self) -> dict[str, float]:
        m = self.mse_values
        return {"mean": float(m.mean()), "min": float(m.min()), "max": float(m.max()), "median": float(np.median(m))}


def mean_squared_error(ms_series: Sequence[float], reference: Sequence[float]) -> float:
    """Mean of squared differences over the versions with a defined reference.

    Versions past the end of ``ms_series`` (no selected mutant left) count
    with a score of 0: a suite that no longer exists assesses nothing.
    """
    total, n = 0.0, 0
    for t, ref in enumerate(reference):
        if ref != ref:  # nan: nothing to compare against
            continue
        ms = ms_series[t] if t < len(ms_series) else 0.0
        total += (ms - ref) ** 2
        n += 1
    return total / n if n else 0.0


def _run_repetition(ctx: SimContext, cfg: SelectionConfig, repetition: int) -> Repetition:
    fraction, picked = _select_indices(ctx, cfg, repetition)
    k = len(picked)
    rows = ctx.rows[:, picked]
    survival, survivors, ms = [], [], []
    truncated_at = None
    for t in range(ctx.length):
        alive = rows[t][rows[t] >= 0]
        survivors.append(len(alive))
        survival.append(len(alive) / k)
        if not len(alive):
            if truncated_at is None:
                truncated_at = t
            continue
        if truncated_at is None:
            ms.append(float(np.count_nonzero(ctx.killed[t][alive])) / len(alive))
    if cfg.reference == "fresh":
        reference = ctx.fresh_reference.tolist()
    else:
        reference = [ms[0]] * ctx.length
    return Repetition(
        repetition=repetition,
        fraction=fraction,
        selected=tuple(ctx.pool[i] for i in picked),
        survival_curve=tuple(survival),
        survivors=tuple(survivors),
        ms_series=tuple(ms),
        reference_ms_series=tuple(reference),
        truncated_at=truncated_at,
        mse=mean_squared_error(ms, reference),
    )


def run_simulation(timeline: Timeline, cfg: SelectionConfig, context: SimContext | None = None) -> SimulationResult:
    ctx = context or prepare(timeline, cfg.origin, cfg.pool)
    if not ctx.pool:
        raise EmptyPool(f"{timeline.file}: no mutants in the {cfg.pool} pool")
    reps = ordered_map(lambda r: _run_repetition(ctx, cfg, r), range(cfg.repetitions))
    return SimulationResult(
        config=cfg,
        file=timeline.file,
        version_ids=tuple(tp.version_id for tp in timeline.points[cfg.origin :]),
        repetitions=tuple(reps),
    )


def relevance_length(curve: Sequence[float], threshold: float = 0.9) -> int:
    """Number of leading versions over which the survival curve stays >= threshold."""
    n = 0
    for value in curve:
        if value < threshold:
            break
        n += 1
    return n


def mean_relevance(result: SimulationResult, threshold: float = 0.9) -> float:
    return float(np.mean([relevance_length(r.survival_curve, threshold) for r in result.repetitions]))


def relevance_ratio(
    timeline: Timeline,
    cfg_a: SelectionConfig,
    cfg_b: SelectionConfig,
    threshold: float = 0.9,
    *,
    strict: bool = False,
) -> float:
    """How many times longer selection ``a`` stays relevant than selection ``b``.

    Relevance is the mean count of versions, from the origin, before the
    survival curve first drops below ``threshold``. A zero denominator
    yields ``math.inf`` (or raises with ``strict``).
    """
    contexts: dict[tuple[int, str], SimContext] = {}

    def run(cfg: SelectionConfig) -> SimulationResult:
        key = (cfg.origin, cfg.pool)
        if key not in contexts:
            contexts[key] = prepare(timeline, cfg.origin, cfg.pool)
        return run_simulation(timeline, cfg, contexts[key])

    a = mean_relevance(run(cfg_a), threshold)
    b = mean_relevance(run(cfg_b), threshold)
    if b == 0:
        if strict:
            raise DivisionByZeroRelevance(f"selection b never reaches survival {threshold}")
        return math.inf
    return a / b


@dataclass(frozen=True)
class Envelope:
    mean: tuple[float, ...]
    min: tuple[float, ...]
    max: tuple[float, ...]
    count: int = 0


def aggregate_normalized(results: Sequence[SimulationResult], bins: int) -> Envelope:
    """Survival envelopes over every repetition of every result, on a common history scale."""
    if bins < 2:
        raise ValueError("bins must be at least 2")
    curves = np.array(
        [resample_step(r.survival_curve, bins) for res in results for r in res.repetitions], dtype=float
    )
    if not len(curves):
        raise ValueError("no repetitions to aggregate")
    return Envelope(
        mean=tuple(curves.mean(axis=0).tolist()),
        min=tuple(curves.min(axis=0).tolist()),
        max=tuple(curves.max(axis=0).tolist()),
        count=len(curves),
    )
