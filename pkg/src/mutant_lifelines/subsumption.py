"""Dynamic subsumption over one version's kill matrix, and mutation scores.

Mutant a subsumes b when some test kills a and every test killing a
also kills b. Mutants with identical kill sets form one group; the
subsuming groups are the ones whose kill set has no proper subset among
the other groups' kill sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Iterable

import numpy as np

from .errors import EmptySubset, LengthMismatch, UnknownMutant, UnknownTestId
from .model import KillMatrix, MutantId


@dataclass(frozen=True)
class KillVector:
    bits: tuple[bool, ...]

    @property
    def kill_set(self) -> frozenset[int]:
        return frozenset(i for i, b in enumerate(self.bits) if b)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class SubsumptionResult:
    # Each group is a sorted tuple of ids; groups are ordered by first id.
    groups: tuple[tuple[MutantId, ...], ...]
    subsuming_groups: tuple[tuple[MutantId, ...], ...]
    representatives: tuple[MutantId, ...]
    never_killed: tuple[MutantId, ...]

    def to_dict(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "subsuming_groups": [list(g) for g in self.subsuming_groups],
            "representatives": list(self.representatives),
            "never_killed": list(self.never_killed),
        }


def kill_vector(km: KillMatrix, m: MutantId) -> KillVector:
    row = km.row_of.get(m)
    if row is None:
        raise UnknownMutant(m)
    bits = np.unpackbits(km.packed[row], count=len(km.test_ids)).astype(bool) if km.test_ids else ()
    return KillVector(tuple(bool(b) for b in bits))


def subsumes(a: KillVector, b: KillVector) -> bool:
    if len(a) != len(b):
        raise LengthMismatch(f"kill vectors of length {len(a)} and {len(b)}")
    killed_a = False
    for x, y in zip(a.bits, b.bits):
        if x:
            killed_a = True
            if not y:
                return False
    return killed_a


def _as_words(packed: np.ndarray) -> np.ndarray:
    """View bit-packed rows as uint64 words (zero-padded) for fast subset tests."""
    n, width = packed.shape
    words = (width + 7) // 8
    padded = np.zeros((n, max(words, 1) * 8), dtype=np.uint8)
    padded[:, :width] = packed
    return padded.view(np.uint64)


def _popcount(words: np.ndarray) -> np.ndarray:
    as_bytes = words.view(np.uint8).reshape(len(words), -1)
    return np.unpackbits(as_bytes, axis=1).sum(axis=1)


def _minimal_rows(words: np.ndarray, budget: int = 1 << 22) -> np.ndarray:
    """Boolean mask of rows (all distinct, nonzero) with no proper subset among the rows.

    Rows are visited by increasing popcount; rows of equal popcount cannot
    contain one another, so each level is checked only against the minimal
    rows already found. A found row can only be a subset of ``r`` if its
    lowest set bit is set in ``r``, so found rows are bucketed by that bit
    and ``r`` is compared against the buckets of its own bits only.
    """
    n, width = words.shape
    bits = np.unpackbits(words.view(np.uint8).reshape(n, -1), axis=1).astype(bool)
    pop = bits.sum(axis=1)
    anchor = bits.argmax(axis=1)
    order = np.argsort(pop, kind="stable")
    pop_sorted = pop[order]
    minimal = np.zeros(n, dtype=bool)
    buckets: dict[int, list[np.ndarray]] = {}
    for level in np.unique(pop_sorted):
        members = order[pop_sorted == level]
        is_min = np.ones(len(members), dtype=bool)
        if buckets:
            member_bits = bits[members]
            member_words = words[members]
            for j, found in buckets.items():
                if len(found) > 1:
                    found = buckets[j] = [np.concatenate(found)]
                found = found[0]
                rows = np.flatnonzero(member_bits[:, j] & is_min)
                if not len(rows):
                    continue
                step = max(1, budget // (len(found) * width))
                for s in range(0, len(rows), step):
                    idx = rows[s : s + step]
                    part = member_words[idx]
                    # f is a subset of r  <=>  f & ~r == 0
                    covered = ~np.any(found[None, :, :] & ~part[:, None, :], axis=2)
                    is_min[idx[covered.any(axis=1)]] = False
        new = members[is_min]
        minimal[new] = True
        for j in np.unique(anchor[new]).tolist():
            buckets.setdefault(j, []).append(words[new[anchor[new] == j]])
    return minimal


def subsuming_set(km: KillMatrix) -> SubsumptionResult:
    ids = np.asarray(km.mutant_ids, dtype=object)
    killed = km.killed
    never = tuple(sorted(ids[~killed].tolist()))
    if not killed.any():
        return SubsumptionResult((), (), (), never)

    rows = km.packed[killed]
    killed_ids = ids[killed]
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    members: list[list[str]] = [[] for _ in range(len(uniq))]
    for gi, mid in zip(inverse.tolist(), killed_ids.tolist()):
        members[gi].append(mid)
    groups = [tuple(sorted(g)) for g in members]
    minimal = _minimal_rows(_as_words(uniq))

    ordered = sorted(range(len(groups)), key=lambda g: groups[g][0])
    subsuming = [groups[g] for g in ordered if minimal[g]]
    return SubsumptionResult(
        groups=tuple(groups[g] for g in ordered),
        subsuming_groups=tuple(subsuming),
        representatives=tuple(g[0] for g in subsuming),
        never_killed=never,
    )


def mutation_score(
    km: KillMatrix,
    subset: Collection[MutantId],
    tests: Iterable[str] | None = None,
    *,
    killable_only: bool = False,
) -> float:
    """Share of ``subset`` killed by at least one of ``tests`` (all tests if None).

    With ``killable_only`` the denominator drops mutants no test of the
    full matrix kills.
    """
    subset = list(dict.fromkeys(subset))
    if not subset:
        raise EmptySubset("mutation score of an empty mutant set")
    try:
        rows = np.fromiter((km.row_of[m] for m in subset), dtype=np.int64, count=len(subset))
    except KeyError as exc:
        raise UnknownMutant(exc.args[0]) from None

    if tests is None:
        hit = km.killed[rows]
    else:
        col_of = {t: i for i, t in enumerate(km.test_ids)}
        cols = []
        for t in tests:
            if t not in col_of:
                raise UnknownTestId(t)
            cols.append(col_of[t])
        if cols:
            mask = np.zeros(len(km.test_ids), dtype=bool)
            mask[cols] = True
            packed_mask = np.packbits(mask)
            hit = np.any(km.packed[rows] & packed_mask, axis=1)
        else:
            hit = np.zeros(len(rows), dtype=bool)

    if killable_only:
        killable = km.killed[rows]
        if not killable.any():
            raise EmptySubset("no killable mutant in subset")
        return float(np.count_nonzero(hit & killable)) / float(np.count_nonzero(killable))
    return float(np.count_nonzero(hit)) / len(rows)
