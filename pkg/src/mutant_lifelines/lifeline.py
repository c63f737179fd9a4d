"""Threading mutants through a timeline, and the brittleness measures built on it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyCohort
from .model import Lifeline, Mutant, Timeline
from .parallel import ordered_map


@dataclass(frozen=True)
class BrittlenessCurve:
    """Share of the initial cohort still standing at each timepoint."""

    fractions: tuple[float, ...]

    @property
    def final(self) -> float:
        return self.fractions[-1]


@dataclass(frozen=True)
class HeatmapMatrix:
    labels: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    bins: int


@dataclass(frozen=True)
class BrittlenessSummary:
    per_file: dict[str, float]
    mean_per_file: float
    pooled: float
    cohort_sizes: dict[str, int]


def thread_mutants(timeline: Timeline, origin: int = 0) -> tuple[Lifeline, ...]:
    """One lifeline per mutant of ``points[origin]``, in that version's mutant order."""
    points = timeline.points[origin:]
    cohort = points[0].mutants
    horizon = len(points) - 1
    current: list[Mutant] = list(cohort)
    successors: list[list[str | None]] = [[None] * horizon for _ in cohort]
    alive = list(range(len(cohort)))

    for step in range(horizon):
        if not alive:
            break
        cm = points[step].change_to_next
        nxt = points[step + 1]
        index, by_id = nxt.key_index, nxt.by_id
        new_lines = cm.map_lines(np.fromiter((current[k].line for k in alive), dtype=np.int64, count=len(alive)))
        still = []
        for k, line in zip(alive, new_lines.tolist()):
            if not line:
                continue
            m = current[k]
            mid = index.get((cm.new_file or m.file, line, m.inline_ordinal, m.operator))
            if mid is None:
                continue
            successors[k][step] = mid
            current[k] = by_id[mid]
            still.append(k)
        alive = still

    lifelines = []
    for m, succ in zip(cohort, successors):
        span = 1
        for s in succ:
            if s is None:
                break
            span += 1
        lifelines.append(Lifeline((origin, m.id), tuple(succ), span))
    return tuple(lifelines)


def newcomers(timeline: Timeline) -> list[int]:
    """Per timepoint, mutants with no predecessor in the previous version (0 at t=0).

    These sit outside the brittleness cohort but are reported alongside it.
    """
    counts = [0]
    for prev, cur in zip(timeline.points, timeline.points[1:]):
        cm = prev.change_to_next
        lines = cm.map_lines(np.fromiter((m.line for m in prev.mutants), dtype=np.int64, count=len(prev.mutants)))
        inherited = set()
        for m, line in zip(prev.mutants, lines.tolist()):
            if line:
                mid = cur.key_index.get((cm.new_file or m.file, line, m.inline_ordinal, m.operator))
                if mid is not None:
                    inherited.add(mid)
        counts.append(sum(1 for m in cur.mutants if m.id not in inherited))
    return counts


def spans_to_curve(spans: Sequence[int], length: int) -> BrittlenessCurve:
    if not len(spans):
        raise EmptyCohort("initial version has no mutants")
    spans = np.asarray(spans)
    fractions = tuple(float(np.count_nonzero(spans > t)) / len(spans) for t in range(length))
    return BrittlenessCurve(fractions)


def brittleness_curve(timeline: Timeline, lifelines: Sequence[Lifeline] | None = None) -> BrittlenessCurve:
    if not timeline.points[0].mutants:
        raise EmptyCohort(f"{timeline.file}: initial version has no mutants")
    if lifelines is None:
        lifelines = thread_mutants(timeline)
    return spans_to_curve([lf.standing_span for lf in lifelines], len(timeline.points))


def brittleness(timeline: Timeline, lifelines: Sequence[Lifeline] | None = None) -> float:
    """Share of the initial cohort that no longer stands at the last timepoint."""
    return 1.0 - brittleness_curve(timeline, lifelines).final


def resample_step(values: Sequence[float], bins: int) -> list[float]:
    """Resample a per-timepoint series onto ``bins`` equal fractions of history.

    Timepoint t of T holds over the history interval [t/T, (t+1)/T), the
    last one including 1.0; bin b sits at position b/(bins-1) and takes the
    value holding there. Both endpoints are always preserved.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    n = len(values)
    return [values[min(n - 1, (b * n) // (bins - 1))] for b in range(bins)]


def heatmap(timelines: Sequence[Timeline], bins: int) -> HeatmapMatrix:
    if bins < 2:
        raise ValueError("bins must be at least 2")
    curves = ordered_map(brittleness_curve, timelines)
    return HeatmapMatrix(
        labels=tuple(t.file for t in timelines),
        rows=tuple(tuple(resample_step(c.fractions, bins)) for c in curves),
        bins=bins,
    )


def corpus_brittleness(timelines: Sequence[Timeline], labels: Sequence[str] | None = None) -> BrittlenessSummary:
    """Brittleness per file, their plain mean, and the mutant-pooled figure.

    The pooled value weights every initial mutant equally across files;
    the mean weights every file equally.
    """
    labels = list(labels) if labels is not None else [t.file for t in timelines]
    all_lifelines = ordered_map(thread_mutants, timelines)
    per_file, sizes = {}, {}
    degraded = total = 0
    for label, tl, lifelines in zip(labels, timelines, all_lifelines):
        per_file[label] = brittleness(tl, lifelines)
        sizes[label] = len(lifelines)
        degraded += sum(1 for lf in lifelines if lf.standing_span < len(tl.points))
        total += len(lifelines)
    return BrittlenessSummary(
        per_file=per_file,
        mean_per_file=float(np.mean(list(per_file.values()))),
        pooled=degraded / total,
        cohort_sizes=sizes,
    )
