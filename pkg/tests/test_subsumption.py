from __future__ import annotations

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mutant_lifelines.errors import EmptySubset, LengthMismatch, UnknownMutant, UnknownTestId
from mutant_lifelines.model import KillMatrix
from mutant_lifelines.subsumption import KillVector, kill_vector, mutation_score, subsumes, subsuming_set


def matrix(rows, tests=None):
    rows = np.asarray(rows, dtype=bool).reshape(len(rows), -1)
    tests = tests or [f"t{j + 1}" for j in range(rows.shape[1])]
    return KillMatrix([f"m{i + 1}" for i in range(len(rows))], tests, rows)


# kill sets {t1}, {t1,t2}, {t1,t2}, {t2} over three tests
FIXTURE = [[1, 0, 0], [1, 1, 0], [1, 1, 0], [0, 1, 0]]


def brute_force_subsuming(rows):
    """Minimal kill-set classes by pairwise comparison of Python sets."""
    sets = {i: frozenset(j for j, b in enumerate(r) if b) for i, r in enumerate(rows)}
    killed = {i: s for i, s in sets.items() if s}
    classes = {}
    for i, s in killed.items():
        classes.setdefault(s, []).append(i)
    minimal = [s for s in classes if not any(o < s for o in classes)]
    return sorted(sorted(classes[s]) for s in minimal)


def test_kill_vector_lookup():
    km = matrix([[True, False]])
    assert kill_vector(km, "m1").bits == (True, False)
    assert kill_vector(matrix([[0, 0]]), "m1").kill_set == frozenset()
    km = matrix(FIXTURE)
    assert [kill_vector(km, f"m{i}").bits for i in range(1, 5)] == [tuple(map(bool, r)) for r in FIXTURE]
    with pytest.raises(UnknownMutant):
        kill_vector(km, "nope")


def test_subsumes_definition():
    a, b = KillVector((True, False)), KillVector((True, True))
    assert subsumes(a, b)
    assert not subsumes(b, a)
    assert not subsumes(KillVector((False, False)), b)
    assert subsumes(b, b)
    with pytest.raises(LengthMismatch):
        subsumes(a, KillVector((True,)))


def test_disjoint_kills_all_subsuming():
    res = subsuming_set(matrix(np.eye(4)))
    assert len(res.subsuming_groups) == 4 == len(res.groups)


def test_fixture_has_two_subsuming_groups():
    res = subsuming_set(matrix(FIXTURE))
    assert res.subsuming_groups == (("m1",), ("m4",))
    assert res.groups == (("m1",), ("m2", "m3"), ("m4",))
    assert [[int(m[1:]) - 1 for m in g] for g in res.subsuming_groups] == brute_force_subsuming(FIXTURE)


def test_empty_matrix():
    res = subsuming_set(KillMatrix([], ["t1"]))
    assert res.groups == () and res.representatives == () and res.never_killed == ()


def test_never_killed_reported_separately():
    res = subsuming_set(matrix([[0, 0], [1, 0]]))
    assert res.never_killed == ("m1",)
    assert res.representatives == ("m2",)


def test_mutation_score_examples():
    km = matrix([[1, 0], [0, 0], [0, 1], [0, 0]])
    assert mutation_score(km, ["m1", "m2", "m3", "m4"]) == 0.5
    assert mutation_score(km, ["m1", "m2", "m3", "m4"], []) == 0.0
    fx = matrix(FIXTURE)
    reps = subsuming_set(fx).representatives
    assert mutation_score(fx, reps, ["t1"]) == 0.5
    assert mutation_score(km, ["m1", "m2"], killable_only=True) == 1.0


def test_mutation_score_errors():
    km = matrix(FIXTURE)
    with pytest.raises(EmptySubset):
        mutation_score(km, [])
    with pytest.raises(UnknownMutant):
        mutation_score(km, ["zz"])
    with pytest.raises(UnknownTestId):
        mutation_score(km, ["m1"], ["t9"])


kill_rows = st.integers(1, 8).flatmap(
    lambda t: st.lists(st.lists(st.booleans(), min_size=t, max_size=t), max_size=12)
)


@given(kill_rows)
def test_groups_match_brute_force(rows):
    if not rows:
        return
    res = subsuming_set(matrix(rows))
    got = sorted(sorted(int(m[1:]) - 1 for m in g) for g in res.subsuming_groups)
    assert got == brute_force_subsuming(rows)


@given(kill_rows, st.randoms(use_true_random=False))
def test_invariant_under_row_permutation(rows, rnd):
    if not rows:
        return
    km = matrix(rows)
    order = list(range(len(rows)))
    rnd.shuffle(order)
    shuffled = KillMatrix([km.mutant_ids[i] for i in order], km.test_ids, km.cells[order])
    assert subsuming_set(shuffled) == subsuming_set(km)


@given(kill_rows)
def test_subsumes_reflexive_and_transitive(rows):
    vecs = [KillVector(tuple(r)) for r in rows]
    for a in vecs:
        assert subsumes(a, a) == any(a.bits)
    for a, b, c in itertools.product(vecs[:5], repeat=3):
        if subsumes(a, b) and subsumes(b, c):
            assert subsumes(a, c)


@given(kill_rows, st.data())
def test_score_monotone_in_tests(rows, data):
    if not rows:
        return
    km = matrix(rows)
    small = data.draw(st.sets(st.sampled_from(km.test_ids)))
    extra = data.draw(st.sets(st.sampled_from(km.test_ids)))
    ids = km.mutant_ids
    assert mutation_score(km, ids, small) <= mutation_score(km, ids, small | extra)


def test_larger_matrix_matches_brute_force():
    rng = random.Random(3)
    rows = [[rng.random() < 0.2 for _ in range(70)] for _ in range(400)]
    res = subsuming_set(matrix(rows))
    got = sorted(sorted(int(m[1:]) - 1 for m in g) for g in res.subsuming_groups)
    assert got == brute_force_subsuming(rows)
