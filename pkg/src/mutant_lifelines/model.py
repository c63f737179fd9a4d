"""Domain types shared by every other module, plus structural validation.

Everything here is immutable after construction. Kill matrices keep
their cells bit-packed (``numpy.packbits`` along the test axis) because
real matrices run to tens of thousands of rows; ``KillMatrix.cells``
unpacks on demand.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from .diffmap import ChangeMap, Hunk

MutantId = str
MutantKey = tuple[str, int, int, str]


@dataclass(frozen=True)
class Mutant:
    id: MutantId
    file: str
    line: int
    inline_ordinal: int
    operator: str
    description: str = ""

    @property
    def key(self) -> MutantKey:
        """Identity of the mutated code element within one version."""
        return (self.file, self.line, self.inline_ordinal, self.operator)


class KillMatrix:
    """Boolean mutant x test table; ``cells[m][t]`` is true iff test t kills mutant m."""

    __slots__ = ("mutant_ids", "test_ids", "packed", "_row_of", "_killed")

    def __init__(self, mutant_ids: Sequence[MutantId], test_ids: Sequence[str], cells=None, *, packed=None):
        self.mutant_ids = tuple(mutant_ids)
        self.test_ids = tuple(test_ids)
        n, t = len(self.mutant_ids), len(self.test_ids)
        if packed is None:
            cells = np.zeros((n, t), dtype=bool) if cells is None else np.asarray(cells, dtype=bool)
            if cells.shape != (n, t):
                raise ValueError(f"cells shape {cells.shape} does not match {n} mutants x {t} tests")
            packed = np.packbits(cells, axis=1) if t else np.zeros((n, 0), dtype=np.uint8)
        else:
            packed = np.ascontiguousarray(packed, dtype=np.uint8)
            if packed.shape != (n, (t + 7) // 8):
                raise ValueError(f"packed shape {packed.shape} does not match {n} x {t}")
        packed.setflags(write=False)
        self.packed = packed
        self._row_of = None
        self._killed = None

    @property
    def cells(self) -> np.ndarray:
        n, t = len(self.mutant_ids), len(self.test_ids)
        if not t:
            return np.zeros((n, 0), dtype=bool)
        return np.unpackbits(self.packed, axis=1, count=t).astype(bool)

    @property
    def row_of(self) -> dict[MutantId, int]:
        if self._row_of is None:
            self._row_of = {m: i for i, m in enumerate(self.mutant_ids)}
        return self._row_of

    @property
    def killed(self) -> np.ndarray:
        """Per-row flag: killed by at least one test of the full test set."""
        if self._killed is None:
            k = self.packed.any(axis=1) if self.packed.size else np.zeros(len(self.mutant_ids), dtype=bool)
            k.setflags(write=False)
            self._killed = k
        return self._killed

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.mutant_ids), len(self.test_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KillMatrix):
            return NotImplemented
        return (
            self.mutant_ids == other.mutant_ids
            and self.test_ids == other.test_ids
            and np.array_equal(self.packed, other.packed)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"KillMatrix({len(self.mutant_ids)} mutants x {len(self.test_ids)} tests)"


@dataclass(frozen=True)
class TimePoint:
    version_id: str
    index: int
    mutants: tuple[Mutant, ...]
    kills: KillMatrix
    change_to_next: ChangeMap | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mutants", tuple(self.mutants))

    @cached_property
    def key_index(self) -> dict[MutantKey, MutantId]:
        return {m.key: m.id for m in self.mutants}

    @cached_property
    def by_id(self) -> dict[MutantId, Mutant]:
        return {m.id: m for m in self.mutants}


@dataclass(frozen=True)
class Timeline:
    file: str
    points: tuple[TimePoint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Lifeline:
    origin: tuple[int, MutantId]
    # One entry per later timepoint; None from the first version the mutant is gone.
    successors: tuple[MutantId | None, ...]
    standing_span: int

    def reaches(self, t: int) -> bool:
        """Whether the mutant still stands at absolute timepoint index ``t``."""
        return t - self.origin[0] < self.standing_span

    def at(self, t: int) -> MutantId | None:
        offset = t - self.origin[0]
        if offset == 0:
            return self.origin[1]
        if 0 < offset <= len(self.successors):
            return self.successors[offset - 1]
        return None


@dataclass(frozen=True)
class Violation:
    kind: str
    location: Any
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.kind}@{self.location}"
        return f"{text}: {self.detail}" if self.detail else text


def validate_timeline(timeline: Timeline) -> list[Violation]:
    """Every breached structural invariant, as data; empty means well formed."""
    out: list[Violation] = []
    points = timeline.points
    if not points:
        return [Violation("EmptyTimeline", timeline.file)]
    last = len(points) - 1
    for pos, tp in enumerate(points):
        if tp.index != pos:
            out.append(Violation("IndexMismatch", pos, f"index field is {tp.index}"))
        if pos < last and tp.change_to_next is None:
            out.append(Violation("MissingChangeMap", pos))
        if pos == last and tp.change_to_next is not None:
            out.append(Violation("UnexpectedChangeMap", pos))

        ids = Counter(m.id for m in tp.mutants)
        out.extend(Violation("DuplicateMutantId", f"{pos}:{i}") for i, c in ids.items() if c > 1)
        keys = Counter(m.key for m in tp.mutants)
        out.extend(Violation("DuplicateMutantKey", f"{pos}:{k}") for k, c in keys.items() if c > 1)
        for m in tp.mutants:
            if m.line < 1:
                out.append(Violation("InvalidLine", f"{pos}:{m.id}", f"line {m.line}"))
            if m.inline_ordinal < 0:
                out.append(Violation("InvalidOrdinal", f"{pos}:{m.id}", f"ordinal {m.inline_ordinal}"))

        rows = Counter(tp.kills.mutant_ids)
        out.extend(Violation("DuplicateMatrixRow", f"{pos}:{i}") for i, c in rows.items() if c > 1)
        tests = Counter(tp.kills.test_ids)
        out.extend(Violation("DuplicateTestId", f"{pos}:{t}") for t, c in tests.items() if c > 1)
        out.extend(Violation("OrphanMatrixRow", f"{pos}:{i}") for i in rows if i not in ids)
        out.extend(Violation("MissingMatrixRow", f"{pos}:{i}") for i in ids if i not in rows)

        cm = tp.change_to_next
        if cm is not None and cm.old_line_count is not None:
            for m in tp.mutants:
                if m.line > cm.old_line_count:
                    out.append(
                        Violation("LineBeyondChangeMap", f"{pos}:{m.id}", f"line {m.line} > {cm.old_line_count}")
                    )
        if pos > 0:
            prev = points[pos - 1].change_to_next
            if prev is not None and cm is not None and None not in (prev.new_line_count, cm.old_line_count):
                if prev.new_line_count != cm.old_line_count:
                    out.append(
                        Violation(
                            "LineCountMismatch",
                            pos,
                            f"incoming map ends at {prev.new_line_count} lines, outgoing starts at {cm.old_line_count}",
                        )
                    )
    return out


# --------------------------------------------------------------------------
# plain-data round trip (JSON-compatible)


def _hunk_to_dict(h: Hunk) -> dict:
    return {
        "old_start": h.old_start,
        "old_len": h.old_len,
        "new_start": h.new_start,
        "new_len": h.new_len,
        "removed_lines": sorted(h.removed_lines),
        "added_lines": sorted(h.added_lines),
        "body": list(h.body),
    }


def changemap_to_dict(cm: ChangeMap) -> dict:
    return {
        "hunks": [_hunk_to_dict(h) for h in cm.hunks],
        "old_line_count": cm.old_line_count,
        "new_line_count": cm.new_line_count,
        "new_file": cm.new_file,
    }


def changemap_from_dict(d: dict) -> ChangeMap:
    hunks = tuple(
        Hunk(
            h["old_start"],
            h["old_len"],
            h["new_start"],
            h["new_len"],
            frozenset(h["removed_lines"]),
            frozenset(h["added_lines"]),
            tuple(h.get("body", ())),
        )
        for h in d["hunks"]
    )
    return ChangeMap(hunks, d.get("old_line_count"), d.get("new_line_count"), d.get("new_file"))


def timeline_to_dict(timeline: Timeline) -> dict:
    points = []
    for tp in timeline.points:
        cells = tp.kills.cells
        points.append(
            {
                "version_id": tp.version_id,
                "index": tp.index,
                "mutants": [
                    [m.id, m.file, m.line, m.inline_ordinal, m.operator, m.description] for m in tp.mutants
                ],
                "kills": {
                    "mutant_ids": list(tp.kills.mutant_ids),
                    "test_ids": list(tp.kills.test_ids),
                    "killed_by": [np.flatnonzero(row).tolist() for row in cells],
                },
                "change_to_next": None if tp.change_to_next is None else changemap_to_dict(tp.change_to_next),
            }
        )
    return {"file": timeline.file, "points": points}


def timeline_from_dict(d: dict) -> Timeline:
    points = []
    for p in d["points"]:
        k = p["kills"]
        cells = np.zeros((len(k["mutant_ids"]), len(k["test_ids"])), dtype=bool)
        for row, hits in enumerate(k["killed_by"]):
            cells[row, hits] = True
        cm = p.get("change_to_next")
        points.append(
            TimePoint(
                version_id=p["version_id"],
                index=p["index"],
                mutants=tuple(Mutant(*m) for m in p["mutants"]),
                kills=KillMatrix(k["mutant_ids"], k["test_ids"], cells),
                change_to_next=None if cm is None else changemap_from_dict(cm),
            )
        )
    return Timeline(d["file"], tuple(points))


def make_kill_matrix(
    mutant_ids: Iterable[MutantId], test_ids: Iterable[str], kills: Iterable[tuple[MutantId, str]]
) -> KillMatrix:
    """Dense matrix from (mutant, test) kill pairs; unknown ids raise ``KeyError``."""
    mutant_ids, test_ids = list(mutant_ids), list(test_ids)
    row = {m: i for i, m in enumerate(mutant_ids)}
    col = {t: i for i, t in enumerate(test_ids)}
    cells = np.zeros((len(mutant_ids), len(test_ids)), dtype=bool)
    for m, t in kills:
        cells[row[m], col[t]] = True
    return KillMatrix(mutant_ids, test_ids, cells)
