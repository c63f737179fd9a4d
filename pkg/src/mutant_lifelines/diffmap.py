"""Line-level change maps between consecutive versions of a file.

A :class:`ChangeMap` is built either from unified diff text
(:func:`parse_unified_diff`) or from the two file contents
(:func:`compute_hunks`). :func:`map_line` and :func:`map_mutant` carry a
line, or a mutant sitting on it, from the old version into the new one.

Lines are kept with their terminators (see :func:`split_lines`) so patch
application reproduces files byte for byte; nothing is normalised.
"""

from __future__ import annotations

import re
from bisect import bisect_left, bisect_right
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .errors import LineOutOfRange, MalformedDiff

if TYPE_CHECKING:
    from .model import Mutant, MutantKey

NO_NEWLINE_MARKER = "\\ No newline at end of file\n"

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def split_lines(text: str) -> list[str]:
    """Split after every ``\\n``, keeping terminators; ``\\r`` is ordinary data."""
    if not text:
        return []
    parts = text.split("\n")
    lines = [p + "\n" for p in parts[:-1]]
    if parts[-1]:
        lines.append(parts[-1])
    return lines


def _first_old_line(old_start: int, old_len: int) -> int:
    # For a pure insertion the header names the line *before* the gap.
    return old_start if old_len else old_start + 1


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    removed_lines: frozenset[int] = frozenset()
    added_lines: frozenset[int] = frozenset()
    # Unified-diff body lines, tag character included ("-x\n", "+y\n", " z\n").
    # A line without a trailing "\n" had no newline at end of file.
    body: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if min(self.old_start, self.old_len, self.new_start, self.new_len) < 0:
            raise MalformedDiff(f"negative field in hunk {self.header()}")
        object.__setattr__(self, "removed_lines", frozenset(self.removed_lines))
        object.__setattr__(self, "added_lines", frozenset(self.added_lines))
        object.__setattr__(self, "body", tuple(self.body))
        old_hi = self.old_start + self.old_len
        new_hi = self.new_start + self.new_len
        if any(not self.old_start <= ln < old_hi for ln in self.removed_lines):
            raise MalformedDiff(f"removed line outside hunk {self.header()}")
        if any(not self.new_start <= ln < new_hi for ln in self.added_lines):
            raise MalformedDiff(f"added line outside hunk {self.header()}")

    @classmethod
    def from_body(
        cls, old_start: int, old_len: int, new_start: int, new_len: int, body: Sequence[str]
    ) -> Hunk:
        """Build a hunk from header numbers plus body, deriving the line sets."""
        removed, added = set(), set()
        old_ln = old_start if old_len else old_start + 1
        new_ln = new_start if new_len else new_start + 1
        n_old = n_new = 0
        for line in body:
            tag = line[:1]
            if tag == " ":
                old_ln += 1
                new_ln += 1
                n_old += 1
                n_new += 1
            elif tag == "-":
                removed.add(old_ln)
                old_ln += 1
                n_old += 1
            elif tag == "+":
                added.add(new_ln)
                new_ln += 1
                n_new += 1
            else:
                raise MalformedDiff(f"unexpected body line {line!r}")
        if (n_old, n_new) != (old_len, new_len):
            raise MalformedDiff(
                f"body has {n_old} old / {n_new} new lines, header "
                f"@@ -{old_start},{old_len} +{new_start},{new_len} @@ disagrees"
            )
        return cls(old_start, old_len, new_start, new_len, frozenset(removed), frozenset(added), tuple(body))

    @property
    def delta(self) -> int:
        return self.new_len - self.old_len

    @property
    def first_old_line(self) -> int:
        return _first_old_line(self.old_start, self.old_len)

    def header(self) -> str:
        def rng(start: int, length: int) -> str:
            return f"{start}" if length == 1 else f"{start},{length}"

        return f"@@ -{rng(self.old_start, self.old_len)} +{rng(self.new_start, self.new_len)} @@"


@dataclass(frozen=True)
class ChangeMap:
    """Hunks of one version transition plus the line counts on both sides.

    ``old_line_count``/``new_line_count`` may be ``None`` when the map came
    from a bare diff and the file length is unknown. ``new_file`` is set
    only for a declared rename; it names the observed file in the new
    version.
    """

    hunks: tuple[Hunk, ...] = ()
    old_line_count: int | None = None
    new_line_count: int | None = None
    new_file: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hunks", tuple(self.hunks))
        offset = 0
        prev_last = 0
        for h in self.hunks:
            first = h.first_old_line
            if first <= prev_last:
                raise MalformedDiff(f"hunk {h.header()} overlaps or is out of order")
            expected_new_first = first + offset
            new_first = h.new_start if h.new_len else h.new_start + 1
            if new_first != expected_new_first:
                raise MalformedDiff(
                    f"hunk {h.header()}: new start {h.new_start} inconsistent with "
                    f"preceding hunks (expected line {expected_new_first})"
                )
            prev_last = h.old_start + h.old_len - 1 if h.old_len else h.old_start
            offset += h.delta
        if self.old_line_count is not None:
            if self.hunks and prev_last > self.old_line_count:
                raise MalformedDiff(
                    f"hunks reach old line {prev_last} but the old version has "
                    f"{self.old_line_count} lines"
                )
            expected = self.old_line_count + offset
            if self.new_line_count is None:
                object.__setattr__(self, "new_line_count", expected)
            elif self.new_line_count != expected:
                raise MalformedDiff(
                    f"old line count {self.old_line_count} with hunk deltas gives "
                    f"{expected} new lines, not {self.new_line_count}"
                )

    @property
    def total_delta(self) -> int:
        return sum(h.delta for h in self.hunks)

    @cached_property
    def _lookup(self):
        firsts = [h.first_old_line for h in self.hunks]
        cumulative = [0]
        for h in self.hunks:
            cumulative.append(cumulative[-1] + h.delta)
        removed = set().union(*(h.removed_lines for h in self.hunks)) if self.hunks else set()
        # Context lines inside hunks: k-th kept old line -> k-th non-added new line.
        inside: dict[int, int] = {}
        for h in self.hunks:
            if not h.old_len:
                continue
            kept_old = [ln for ln in range(h.old_start, h.old_start + h.old_len) if ln not in h.removed_lines]
            kept_new = [ln for ln in range(h.new_start, h.new_start + h.new_len) if ln not in h.added_lines]
            inside.update(zip(kept_old, kept_new))
        return firsts, cumulative, removed, inside

    def map_line(self, old_line: int) -> int | None:
        if old_line < 1 or (self.old_line_count is not None and old_line > self.old_line_count):
            raise LineOutOfRange(f"line {old_line} outside 1..{self.old_line_count}")
        firsts, cumulative, removed, inside = self._lookup
        if old_line in removed:
            return None
        i = bisect_right(firsts, old_line) - 1
        if i >= 0:
            h = self.hunks[i]
            if h.old_len and old_line < h.old_start + h.old_len:
                return inside[old_line]
        return old_line + cumulative[i + 1]

    def map_lines(self, old_lines: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`map_line`; vanished lines come back as 0."""
        old_lines = np.asarray(old_lines, dtype=np.int64)
        if old_lines.size and (
            old_lines.min() < 1
            or (self.old_line_count is not None and old_lines.max() > self.old_line_count)
        ):
            raise LineOutOfRange(f"lines outside 1..{self.old_line_count}")
        firsts, cumulative, removed, inside = self._lookup
        idx = np.searchsorted(np.asarray(firsts, dtype=np.int64), old_lines, side="right")
        out = old_lines + np.asarray(cumulative, dtype=np.int64)[idx]
        if removed:
            out[np.isin(old_lines, np.fromiter(removed, dtype=np.int64))] = 0
        if inside:
            for k in np.flatnonzero(np.isin(old_lines, np.fromiter(inside, dtype=np.int64))):
                out[k] = inside[int(old_lines[k])]
        return out


def map_line(cm: ChangeMap, old_line: int) -> int | None:
    """Carry ``old_line`` across ``cm``; ``None`` if the line was removed."""
    return cm.map_line(old_line)


def map_mutant(
    cm: ChangeMap,
    m: Mutant,
    next_mutants: Iterable[Mutant] | Mapping[MutantKey, str],
) -> str | None:
    """Id of the mutant standing on the same code element in the next version.

    ``next_mutants`` is either the next version's mutants or a prebuilt
    key -> id mapping (see ``TimePoint.key_index``).
    """
    new_line = cm.map_line(m.line)
    if new_line is None:
        return None
    if not isinstance(next_mutants, Mapping):
        next_mutants = {n.key: n.id for n in next_mutants}
    key = (cm.new_file or m.file, new_line, m.inline_ordinal, m.operator)
    return next_mutants.get(key)


# --------------------------------------------------------------------------
# parsing and rendering


def parse_unified_diff(text: str, old_line_count: int | None = None) -> ChangeMap:
    lines = split_lines(text)
    pos = 0
    while pos < len(lines) and not lines[pos].startswith("@@"):
        line = lines[pos]
        if line[:1] in ("+", "-", " ", "\\") and not line.startswith(("---", "+++")):
            raise MalformedDiff(f"line {pos + 1}: body line before any hunk header")
        pos += 1

    hunks = []
    while pos < len(lines):
        match = _HUNK_RE.match(lines[pos])
        if match is None:
            raise MalformedDiff(f"line {pos + 1}: expected hunk header, got {lines[pos]!r}")
        old_start, new_start = int(match[1]), int(match[3])
        old_len = 1 if match[2] is None else int(match[2])
        new_len = 1 if match[4] is None else int(match[4])
        pos += 1
        body: list[str] = []
        old_rem, new_rem = old_len, new_len
        while old_rem or new_rem:
            if pos >= len(lines):
                raise MalformedDiff(f"hunk at line {pos}: body shorter than header counts")
            line = lines[pos]
            tag = line[:1]
            if line == "\n" or line == "":
                line, tag = " " + line, " "
            if tag == "\\":
                if not body:
                    raise MalformedDiff(f"line {pos + 1}: no-newline marker without a line")
                body[-1] = body[-1][:-1] if body[-1].endswith("\n") else body[-1]
                pos += 1
                continue
            if tag == " " and old_rem and new_rem:
                old_rem -= 1
                new_rem -= 1
            elif tag == "-" and old_rem:
                old_rem -= 1
            elif tag == "+" and new_rem:
                new_rem -= 1
            else:
                raise MalformedDiff(f"line {pos + 1}: body length disagrees with header counts")
            body.append(line)
            pos += 1
        if pos < len(lines) and lines[pos].startswith("\\"):
            body[-1] = body[-1][:-1] if body[-1].endswith("\n") else body[-1]
            pos += 1
        hunks.append(Hunk.from_body(old_start, old_len, new_start, new_len, body))
    return ChangeMap(tuple(hunks), old_line_count=old_line_count)


def format_unified_diff(cm: ChangeMap, old_label: str | None = None, new_label: str | None = None) -> str:
    """Render ``cm`` as unified diff text; hunks need bodies."""
    out = []
    if old_label is not None:
        out.append(f"--- {old_label}\n")
        out.append(f"+++ {new_label if new_label is not None else old_label}\n")
    for h in cm.hunks:
        if not h.body and (h.old_len or h.new_len):
            raise MalformedDiff(f"hunk {h.header()} carries no body to render")
        out.append(h.header() + "\n")
        for line in h.body:
            out.append(line if line.endswith("\n") else line + "\n" + NO_NEWLINE_MARKER)
    return "".join(out)


def apply_patch(old_lines: Sequence[str], cm: ChangeMap) -> list[str]:
    """Apply ``cm`` to ``old_lines``; context and removed lines must match."""
    result: list[str] = []
    cursor = 0  # 0-based index of next unconsumed old line
    for h in cm.hunks:
        if not h.body and (h.old_len or h.new_len):
            raise MalformedDiff(f"hunk {h.header()} carries no body to apply")
        start = h.first_old_line - 1
        if start > len(old_lines):
            raise MalformedDiff(f"hunk {h.header()} starts past end of file")
        result.extend(old_lines[cursor:start])
        cursor = start
        for line in h.body:
            tag, content = line[0], line[1:]
            if tag == "+":
                result.append(content)
                continue
            if cursor >= len(old_lines) or old_lines[cursor] != content:
                raise MalformedDiff(f"hunk {h.header()} does not apply at old line {cursor + 1}")
            if tag == " ":
                result.append(content)
            cursor += 1
    result.extend(old_lines[cursor:])
    return result


# --------------------------------------------------------------------------
# alignment


def lcs_alignment(old: Sequence[str], new: Sequence[str]) -> list[tuple[int, int]]:
    """Matched (old_index, new_index) pairs of a longest common subsequence.

    Among all longest alignments this returns the one whose old indices
    are lexicographically smallest, and for those the earliest new
    indices. Suffix DP rows are computed bit-parallel (one Python int per
    row), so the cost is O(len(old) * len(new) / word size).
    """
    n, m = len(old), len(new)
    p = 0
    while p < n and p < m and old[p] == new[p]:
        p += 1
    pairs = [(k, k) for k in range(p)]
    pairs.extend((i + p, j + p) for i, j in _earliest_lcs(old[p:], new[p:]))
    return pairs


def _earliest_lcs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    if not n or not m:
        return []
    occurrences: dict[str, list[int]] = defaultdict(list)
    for j, x in enumerate(b):
        occurrences[x].append(j)
    # Bit q of a row vector stands for b[m - 1 - q]: the rows describe the
    # reversed problem, whose prefixes are suffixes of the forward one.
    masks = {}
    for x, js in occurrences.items():
        mask = 0
        for j in js:
            mask |= 1 << (m - 1 - j)
        masks[x] = mask
    full = (1 << m) - 1
    v = full
    rows = [v]
    for x in reversed(a):
        mask = masks.get(x)
        if mask:
            u = v & mask
            v = ((v + u) | (v - u)) & full
        rows.append(v)

    def suffix_lcs(i: int, j: int) -> int:
        width = m - j
        return width - (rows[n - i] & ((1 << width) - 1)).bit_count()

    pairs = []
    i = j = 0
    remaining = suffix_lcs(0, 0)
    while remaining:
        while True:
            js = occurrences.get(a[i])
            if js:
                k = bisect_left(js, j)
                if k < len(js) and suffix_lcs(i + 1, js[k] + 1) == remaining - 1:
                    break
            i += 1
        jj = js[k]
        pairs.append((i, jj))
        i, j = i + 1, jj + 1
        remaining -= 1
    return pairs


def hunks_from_alignment(
    old: Sequence[str], new: Sequence[str], pairs: Sequence[tuple[int, int]]
) -> list[Hunk]:
    hunks = []
    pi = pj = -1
    for i, j in list(pairs) + [(len(old), len(new))]:
        a, b = pi + 1, pj + 1
        old_len, new_len = i - a, j - b
        if old_len or new_len:
            body = ["-" + x for x in old[a:i]] + ["+" + y for y in new[b:j]]
            hunks.append(
                Hunk(
                    old_start=a + 1 if old_len else a,
                    old_len=old_len,
                    new_start=b + 1 if new_len else b,
                    new_len=new_len,
                    removed_lines=frozenset(range(a + 1, i + 1)),
                    added_lines=frozenset(range(b + 1, j + 1)),
                    body=tuple(body),
                )
            )
        pi, pj = i, j
    return hunks


def compute_hunks(old_lines: Sequence[str], new_lines: Sequence[str]) -> ChangeMap:
    """Zero-context hunks from an LCS alignment of the two line sequences."""
    old_lines, new_lines = list(old_lines), list(new_lines)
    pairs = lcs_alignment(old_lines, new_lines)
    return ChangeMap(
        tuple(hunks_from_alignment(old_lines, new_lines, pairs)),
        old_line_count=len(old_lines),
        new_line_count=len(new_lines),
    )
