"""Seeded synthetic evolving histories with known ground truth.

Each version is a list of unique source lines. Between versions every
line is independently edited (replaced, deleted, or followed by an
inserted line) with a probability that depends on whether it lies in
the hot region. Mutants are a deterministic function of a line's
content, so an untouched line keeps identical mutant keys, and its kill
rows are kept as well.

The generator records which line survived where while it edits, which
gives standing spans and line maps that never pass through the diff or
lifeline code and can serve as an oracle for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffmap import compute_hunks
from .model import KillMatrix, Mutant, TimePoint, Timeline

OPERATORS = (
    "CONDITIONALS_BOUNDARY",
    "NEGATE_CONDITIONALS",
    "MATH",
    "INCREMENTS",
    "INVERT_NEGS",
    "RETURN_VALS",
    "VOID_METHOD_CALLS",
    "PRIMITIVE_RETURNS",
)

REPLACE, DELETE, INSERT = 0, 1, 2


@dataclass(frozen=True)
class SynthConfig:
    versions: int = 10
    initial_lines: int = 100
    # 1-based inclusive range of initial lines; None means the middle 30%.
    hot_region: tuple[int, int] | None = None
    p_hot: float = 0.4
    p_cold: float = 0.02
    mutants_per_line: float = 3.0
    tests: int = 20
    kill_density: float = 0.3
    seed: int = 42
    # relative weights of replace / delete / insert-after edits
    edit_weights: tuple[float, float, float] = (0.6, 0.2, 0.2)
    non_adjacent: bool = False
    # "local": tests cover windows of the file; "bernoulli": every test may kill anything
    kill_model: str = "local"
    # share of the file each test covers under the local model
    test_span: float = 0.15
    file: str = "src/main/java/org/example/Subject.java"

    def __post_init__(self) -> None:
        if self.versions < 1:
            raise ValueError("versions must be at least 1")
        if self.initial_lines < 0:
            raise ValueError("initial_lines must be non-negative")
        if not 0 <= self.p_cold <= self.p_hot <= 1:
            raise ValueError("need 0 <= p_cold <= p_hot <= 1")
        if not 0 <= self.kill_density <= 1:
            raise ValueError("kill_density must lie in [0, 1]")
        if self.mutants_per_line < 0 or self.tests < 0:
            raise ValueError("mutants_per_line and tests must be non-negative")
        if self.kill_model not in ("local", "bernoulli"):
            raise ValueError(f"unknown kill model {self.kill_model!r}")
        if sum(self.edit_weights) <= 0 or min(self.edit_weights) < 0:
            raise ValueError("edit_weights must be non-negative with a positive sum")
        object.__setattr__(self, "edit_weights", tuple(float(w) for w in self.edit_weights))
        if self.hot_region is not None:
            object.__setattr__(self, "hot_region", tuple(int(x) for x in self.hot_region))

    @property
    def hot_bounds(self) -> tuple[int, int]:
        if self.hot_region is not None:
            return self.hot_region
        n = self.initial_lines
        return (int(n * 0.35) + 1, int(n * 0.65))

    @classmethod
    def from_dict(cls, d: dict) -> SynthConfig:
        d = dict(d)
        for key in ("hot_region", "edit_weights"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class _Line:
    uid: int
    text: str
    hot: bool
    anchor: float  # position in [0, 1) used for test locality
    ops: tuple[tuple[int, str], ...]  # (inline ordinal, operator)
    kills: np.ndarray  # len(ops) x tests


@dataclass
class SyntheticHistory:
    config: SynthConfig
    timeline: Timeline
    contents: list[list[str]]
    # standing span of every version-0 mutant, from generator bookkeeping
    spans: dict[str, int]
    # per consecutive pair: old 1-based line -> new 1-based line, or None if gone
    line_maps: list[dict[int, int | None]] = field(default_factory=list)


class _Factory:
    def __init__(self, cfg: SynthConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.next_uid = 0
        t = cfg.tests
        self.centres = (np.arange(t) + 0.5) / t if t else np.zeros(0)

    def make(self, anchors: np.ndarray, hot: np.ndarray) -> list[_Line]:
        cfg, rng = self.cfg, self.rng
        n = len(anchors)
        if not n:
            return []
        counts = rng.poisson(cfg.mutants_per_line, size=n)
        total = int(counts.sum())
        ops = rng.integers(0, len(OPERATORS), size=total)
        salts = rng.integers(0, 1_000_000, size=n)
        draws = rng.random((total, cfg.tests)) < cfg.kill_density
        if cfg.kill_model == "local" and cfg.tests:
            owner_anchor = np.repeat(anchors, counts)
            dist = np.abs(owner_anchor[:, None] - self.centres[None, :])
            dist = np.minimum(dist, 1.0 - dist)  # circular, so coverage is even
            draws &= dist <= cfg.test_span / 2
        lines = []
        start = 0
        for i in range(n):
            uid = self.next_uid
            self.next_uid += 1
            k = int(counts[i])
            line_ops = tuple((o, OPERATORS[int(ops[start + o])]) for o in range(k))
            text = f"        value{uid} = compute(value{uid}, {int(salts[i])});\n"
            lines.append(_Line(uid, text, bool(hot[i]), float(anchors[i]), line_ops, draws[start : start + k]))
            start += k
        return lines


def _edit(lines: list[_Line], cfg: SynthConfig, rng: np.random.Generator, factory: _Factory) -> list[_Line]:
    n = len(lines)
    if not n:
        return []
    u = rng.random(n)
    kinds = rng.choice(3, size=n, p=np.asarray(cfg.edit_weights) / sum(cfg.edit_weights))
    plan = []  # (position, kind)
    blocked = False
    for i, line in enumerate(lines):
        if blocked:
            blocked = False
            continue
        if u[i] < (cfg.p_hot if line.hot else cfg.p_cold):
            plan.append((i, int(kinds[i])))
            blocked = cfg.non_adjacent
    fresh_needed = [i for i, k in plan if k in (REPLACE, INSERT)]
    fresh = factory.make(
        np.array([lines[i].anchor for i in fresh_needed]), np.array([lines[i].hot for i in fresh_needed])
    )
    fresh_of = dict(zip(fresh_needed, fresh))
    kind_of = dict(plan)
    out: list[_Line] = []
    for i, line in enumerate(lines):
        kind = kind_of.get(i)
        if kind is None:
            out.append(line)
        elif kind == REPLACE:
            out.append(fresh_of[i])
        elif kind == INSERT:
            out.append(line)
            out.append(fresh_of[i])
    return out


def _timepoint(cfg: SynthConfig, t: int, lines: list[_Line], test_ids: list[str]) -> TimePoint:
    mutants = []
    rows = []
    c = 0
    for pos, line in enumerate(lines, start=1):
        for ordinal, op in line.ops:
            mutants.append(Mutant(f"v{t:02d}-m{c:06d}", cfg.file, pos, ordinal, op, f"{op} on value{line.uid}"))
            c += 1
        if line.ops:
            rows.append(line.kills)
    cells = np.concatenate(rows) if rows else np.zeros((0, cfg.tests), dtype=bool)
    kills = KillMatrix([m.id for m in mutants], test_ids, cells)
    return TimePoint(f"v{t:02d}", t, tuple(mutants), kills)


def generate_history(cfg: SynthConfig) -> SyntheticHistory:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed & (2**64 - 1)))
    factory = _Factory(cfg, rng)
    n = cfg.initial_lines
    lo, hi = cfg.hot_bounds
    positions = np.arange(1, n + 1)
    lines = factory.make(np.arange(n) / max(n, 1), (positions >= lo) & (positions <= hi))

    test_ids = [f"T{j:03d}" for j in range(cfg.tests)]
    versions = [lines]
    for _ in range(cfg.versions - 1):
        versions.append(_edit(versions[-1], cfg, rng, factory))

    contents = [[line.text for line in v] for v in versions]
    points = [_timepoint(cfg, t, v, test_ids) for t, v in enumerate(versions)]
    for t in range(len(points) - 1):
        cm = compute_hunks(contents[t], contents[t + 1])
        points[t] = TimePoint(points[t].version_id, t, points[t].mutants, points[t].kills, cm)

    line_maps = []
    for old, new in zip(versions, versions[1:]):
        where = {line.uid: pos for pos, line in enumerate(new, start=1)}
        line_maps.append({pos: where.get(line.uid) for pos, line in enumerate(old, start=1)})

    alive_sets = [{line.uid for line in v} for v in versions]
    spans = {}
    c = 0
    for line in versions[0]:
        span = 1
        while span < len(versions) and line.uid in alive_sets[span]:
            span += 1
        for _ in line.ops:
            spans[f"v00-m{c:06d}"] = span
            c += 1

    return SyntheticHistory(cfg, Timeline(cfg.file, tuple(points)), contents, spans, line_maps)


def emit_history(history: SyntheticHistory, out_dir, layout: str = "diff") -> Path:
    """Write ``history`` as manifest + CSVs + diffs (or snapshots); returns the manifest path."""
    from .ingest import write_timeline

    return write_timeline(
        history.timeline, history.contents, out_dir, subject=f"synthetic-{history.config.seed}", layout=layout
    )
