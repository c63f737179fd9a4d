"""CSV/JSON report writers.

Output must be a pure function of the inputs: no timestamps, sorted JSON
keys, floats written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .lifeline import BrittlenessCurve, HeatmapMatrix, BrittlenessSummary
from .selection import SimulationResult
from .subsumption import SubsumptionResult


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(payload) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, payload) -> None:
    Path(path).write_text(dumps(payload), encoding="utf-8")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(_csv_text(header, rows), encoding="utf-8")


# brittleness ---------------------------------------------------------------


def curves_rows(labels: Sequence[str], version_ids: Sequence[Sequence[str]], curves: Sequence[BrittlenessCurve]):
    for label, vids, curve in zip(labels, version_ids, curves):
        for t, (vid, f) in enumerate(zip(vids, curve.fractions)):
            yield [label, t, vid, f]


CURVE_HEADER = ["file", "timepoint", "version_id", "standing_fraction"]


def heatmap_header(hm: HeatmapMatrix) -> list[str]:
    return ["file"] + [f"bin_{b}" for b in range(hm.bins)]


def heatmap_rows(hm: HeatmapMatrix):
    for label, row in zip(hm.labels, hm.rows):
        yield [label, *row]


def heatmap_payload(hm: HeatmapMatrix) -> dict:
    return {"bins": hm.bins, "rows": [{"file": lb, "values": list(r)} for lb, r in zip(hm.labels, hm.rows)]}


def brittleness_payload(
    summary: BrittlenessSummary, curves: dict[str, BrittlenessCurve], newcomers: dict[str, list[int]]
) -> dict:
    return {
        "mean_per_file": summary.mean_per_file,
        "pooled": summary.pooled,
        "files": {
            label: {
                "brittleness": summary.per_file[label],
                "cohort_size": summary.cohort_sizes[label],
                "curve": list(curves[label].fractions),
                "newcomers": newcomers[label],
            }
            for label in summary.per_file
        },
    }


# subsumption ---------------------------------------------------------------


def subsumption_payload(version_id: str, result: SubsumptionResult, n_mutants: int) -> dict:
    payload = result.to_dict()
    payload.update(
        version_id=version_id,
        mutant_count=n_mutants,
        group_count=len(result.groups),
        subsuming_group_count=len(result.subsuming_groups),
    )
    return payload


# simulation ----------------------------------------------------------------

SIM_HEADER = [
    "file",
    "strategy",
    "pool",
    "repetition",
    "fraction",
    "selected",
    "timepoint",
    "version_id",
    "survivors",
    "survival",
    "ms",
    "reference_ms",
    "truncated",
]


def simulation_rows(result: SimulationResult):
    cfg = result.config
    for rep in result.repetitions:
        for t, vid in enumerate(result.version_ids):
            ms = rep.ms_series[t] if t < len(rep.ms_series) else None
            ref = rep.reference_ms_series[t]
            yield [
                result.file,
                cfg.strategy,
                cfg.pool,
                rep.repetition,
                rep.fraction,
                len(rep.selected),
                t,
                vid,
                rep.survivors[t],
                rep.survival_curve[t],
                ms,
                None if ref != ref else ref,
                int(rep.truncated_at is not None and t >= rep.truncated_at),
            ]


def simulation_summary(result: SimulationResult, threshold: float) -> dict:
    from .selection import mean_relevance

    mse = result.mse_summary()
    cfg = result.config
    return {
        "file": result.file,
        "strategy": cfg.strategy,
        "pool": cfg.pool,
        "reference": cfg.reference,
        "repetitions": cfg.repetitions,
        "fraction_range": list(cfg.fraction_range),
        "seed": cfg.seed,
        "mse": mse,
        "mse_pct": {k: 100.0 * v for k, v in mse.items()},
        "survival_envelope": result.envelope(),
        "mean_relevance_length": mean_relevance(result, threshold),
        "truncated_repetitions": sum(1 for r in result.repetitions if r.truncated_at is not None),
    }
