"""One test per acceptance criterion; the terminal summary prints a PASS/FAIL line for each."""

from __future__ import annotations

import filecmp
import itertools
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from mutant_lifelines.diffmap import apply_patch, format_unified_diff, map_line, map_mutant, parse_unified_diff
from mutant_lifelines.ingest import load_timeline
from mutant_lifelines.lifeline import brittleness, brittleness_curve, heatmap, thread_mutants
from mutant_lifelines.model import KillMatrix
from mutant_lifelines.selection import (
    SelectionConfig,
    aggregate_normalized,
    prepare,
    relevance_ratio,
    run_simulation,
)
from mutant_lifelines.subsumption import subsuming_set
from mutant_lifelines.synthetic import SynthConfig, generate_history

from builders import relevance_fixture, span_timeline, write_matrix_fixture


@pytest.mark.acceptance("AC1", "mapping oracle on 1,000 synthetic version pairs")
def test_ac1_mapping_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    checked = 0
    for _ in range(1000):
        p_hot = float(rng.uniform(0.05, 0.8))
        cfg = SynthConfig(
            versions=2,
            initial_lines=int(rng.integers(1, 301)),
            p_hot=p_hot,
            p_cold=float(rng.uniform(0, p_hot / 2)),
            mutants_per_line=float(rng.uniform(0.5, 3)),
            tests=4,
            seed=int(rng.integers(0, 2**63)),
            non_adjacent=True,
        )
        hist = generate_history(cfg)
        old, new = hist.timeline.points
        cm = old.change_to_next
        truth = hist.line_maps[0]
        assert {ln: map_line(cm, ln) for ln in truth} == truth
        at_position = {(n.line, n.inline_ordinal, n.operator): n.id for n in new.mutants}
        for m in old.mutants:
            expected_line = truth[m.line]
            expected = None if expected_line is None else at_position[(expected_line, m.inline_ordinal, m.operator)]
            assert map_mutant(cm, m, new.key_index) == expected
            checked += 1
        a, b = hist.contents
        assert "".join(apply_patch(a, cm)).encode() == "".join(b).encode()
        reparsed = parse_unified_diff(format_unified_diff(cm, "a", "b"), old_line_count=len(a))
        assert "".join(apply_patch(a, reparsed)).encode() == "".join(b).encode()
    elapsed = time.perf_counter() - start
    print(f"AC1: {checked} mutants over 1000 pairs in {elapsed:.2f}s")
    assert checked > 0
    assert elapsed < 10


def _kills_all(rows, tests, targets):
    return all(any(rows[m][t] for t in tests) for m in targets)


@pytest.mark.acceptance("AC2", "subsumption completeness on 500 random matrices")
def test_ac2_subsumption_completeness():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    counterexamples = 0
    for _ in range(500):
        n, t = int(rng.integers(1, 13)), int(rng.integers(1, 9))
        rows = rng.random((n, t)) < rng.uniform(0.1, 0.7)
        ids = [f"m{i:02d}" for i in range(n)]
        res = subsuming_set(KillMatrix(ids, [f"t{j}" for j in range(t)], rows))
        reps = [ids.index(r) for r in res.representatives]
        killed = [i for i in range(n) if rows[i].any()]
        for size in range(t + 1):
            for tests in itertools.combinations(range(t), size):
                if _kills_all(rows, tests, reps) and not _kills_all(rows, tests, killed):
                    counterexamples += 1
        # every representative is needed: none is subsumed by a different group
        sets = [frozenset(np.flatnonzero(rows[i])) for i in range(n)]
        for r in reps:
            assert not any(sets[k] < sets[r] for k in killed)
    elapsed = time.perf_counter() - start
    print(f"AC2: {counterexamples} counterexamples in {elapsed:.2f}s")
    assert counterexamples == 0
    assert elapsed < 5


@pytest.mark.acceptance("AC3", "three-version read() fixture: 6 of 8 standing, brittleness 0.25")
def test_ac3_bounded_reader_fixture(bounded_reader_manifest):
    tl = load_timeline(bounded_reader_manifest)
    lifelines = thread_mutants(tl)
    assert len(lifelines) == 8
    assert sum(lf.standing_span == 3 for lf in lifelines) == 6
    assert brittleness_curve(tl).fractions == (1.0, 1.0, 0.75)
    assert brittleness(tl) == 0.25


@pytest.mark.acceptance("AC4", "brittleness invariants over 1,000 generated timelines")
def test_ac4_brittleness_invariants():
    rng = np.random.default_rng(4)
    cases = 0
    while cases < 1000:
        p_hot = float(rng.choice([0.0, 0.1, 0.3, 0.7, 1.0]))
        cfg = SynthConfig(
            versions=int(rng.integers(1, 8)),
            initial_lines=int(rng.integers(1, 60)),
            p_hot=p_hot,
            p_cold=float(rng.choice([0.0, min(p_hot, 0.05)])),
            mutants_per_line=float(rng.uniform(0.5, 3)),
            tests=3,
            seed=int(rng.integers(0, 2**63)),
            non_adjacent=bool(rng.integers(0, 2)),
        )
        tl = generate_history(cfg).timeline
        if not tl.points[0].mutants:
            continue
        cases += 1
        lifelines = thread_mutants(tl)
        curve = brittleness_curve(tl, lifelines).fractions
        assert curve[0] == 1.0
        assert all(a >= b for a, b in zip(curve, curve[1:]))

        cohort_lines = {m.line for m in tl.points[0].mutants}
        touched = False
        for tp in tl.points[:-1]:
            cm = tp.change_to_next
            removed = set().union(*(h.removed_lines for h in cm.hunks)) if cm.hunks else set()
            if cohort_lines & removed:
                touched = True
                break
            cohort_lines = {cm.map_line(ln) for ln in cohort_lines}
        assert (brittleness(tl, lifelines) == 0.0) == (not touched)

        bins = int(rng.integers(2, 30))
        (row,) = heatmap([tl], bins).rows
        assert row[0] == curve[0] and row[-1] == curve[-1]
    print(f"AC4: {cases} timelines")


@pytest.mark.acceptance("AC5", "optimal >= random >= worst survival, strict MSE ordering")
def test_ac5_simulation_ordering():
    start = time.perf_counter()
    tl = generate_history(SynthConfig(seed=42, versions=10, p_hot=0.4, p_cold=0.02)).timeline
    ctx = prepare(tl)
    results = {
        s: run_simulation(tl, SelectionConfig(fraction_range=(0.10, 0.30), repetitions=100, seed=42, strategy=s), ctx)
        for s in ("optimal", "random", "worst_case")
    }
    env = {s: aggregate_normalized([r], 10).mean for s, r in results.items()}
    mse = {s: float(r.mse_values.mean()) for s, r in results.items()}
    elapsed = time.perf_counter() - start
    print(f"AC5: mean mse {mse}; {elapsed:.2f}s")
    for b in range(10):
        assert env["optimal"][b] >= env["random"][b] >= env["worst_case"][b]
    assert mse["optimal"] < mse["random"] < mse["worst_case"]
    assert elapsed < 30


@pytest.mark.acceptance("AC6", "span-ranked selection stays relevant 10x longer than random")
def test_ac6_relevance_ratio():
    tl, _ = relevance_fixture()
    ratio = relevance_ratio(
        tl,
        SelectionConfig(strategy="optimal", seed=6),
        SelectionConfig(strategy="random", seed=6),
        threshold=0.9,
    )
    print(f"AC6: relevance ratio {ratio}")
    assert ratio >= 10


@pytest.mark.acceptance("AC7", "MSE arithmetic: constant 0.1 offset and identical sets")
def test_ac7_mse_arithmetic():
    tl, _ = span_timeline({f"m{i}": 5 for i in range(10)}, 5, killed={"m0", "m1", "m2", "m5", "m6"})
    offset = run_simulation(tl, SelectionConfig(fraction_range=(0.5, 0.5), strategy="optimal", repetitions=1))
    (rep,) = offset.repetitions
    assert len(rep.ms_series) == 5
    assert [round(a - b, 12) for a, b in zip(rep.ms_series, rep.reference_ms_series)] == [0.1] * 5
    assert abs(rep.mse - 0.0100) <= 1e-12
    same = run_simulation(tl, SelectionConfig(fraction_range=(1.0, 1.0), repetitions=3))
    assert all(r.mse == 0 for r in same.repetitions)


def _cli(args, cwd, threads):
    env = dict(os.environ, LIFELINE_THREADS=str(threads))
    proc = subprocess.run(
        [sys.executable, "-m", "mutant_lifelines", *map(str, args)], cwd=cwd, env=env, capture_output=True
    )
    return proc.returncode, proc.stdout, proc.stderr


def _same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(_same_tree(a / d, b / d) for d in cmp.common_dirs)


@pytest.mark.acceptance("AC8", "every CLI command is byte-for-byte deterministic")
def test_ac8_cli_determinism(tmp_path, bounded_reader_manifest):
    cfg = tmp_path / "synth.json"
    cfg.write_text(json.dumps({"seed": 42, "versions": 10, "initial_lines": 100, "p_hot": 0.4, "p_cold": 0.02}))
    matrix = write_matrix_fixture(tmp_path / "matrix", [["t1"], ["t1", "t2"], ["t1", "t2"], ["t2"]], ["t1", "t2"])
    commands = {
        "validate": ["validate", bounded_reader_manifest],
        "brittleness": ["brittleness", bounded_reader_manifest, "--gen-synthetic", cfg, "--bins", 12],
        "subsuming": ["subsuming", matrix],
        "subsuming-synthetic": ["subsuming", "--gen-synthetic", cfg],
        "simulate": ["simulate", "--gen-synthetic", cfg, "--reps", 100, "--seed", 9],
        "simulate-subsuming": ["simulate", "--gen-synthetic", cfg, "--reps", 30, "--pool", "subsuming_only"],
        "generate": ["generate", cfg],
    }
    for name, args in commands.items():
        runs = []
        for k, threads in enumerate((1, 1, 64)):
            out = tmp_path / f"{name}-{k}"
            extra = [] if name == "validate" else ["--out", out]
            code, stdout, stderr = _cli([*args, *extra], tmp_path, threads)
            assert code == 0, stderr
            runs.append((stdout.replace(str(out).encode(), b"OUT"), out))
        for stdout, out in runs[1:]:
            assert stdout == runs[0][0], name
            if name != "validate":
                assert _same_tree(runs[0][1], out), name


@pytest.mark.acceptance("AC9", "50,000 mutants x 200 tests x 20 versions in under 2 minutes")
def test_ac9_scale():
    start = time.perf_counter()
    cfg = SynthConfig(versions=20, initial_lines=10_000, mutants_per_line=5.0, tests=200, seed=9)
    tl = generate_history(cfg).timeline
    generated = time.perf_counter()
    n0 = len(tl.points[0].mutants)
    assert 45_000 <= n0 <= 55_000
    b = brittleness(tl)
    groups = [len(subsuming_set(tp.kills).subsuming_groups) for tp in tl.points]
    res = run_simulation(tl, SelectionConfig(repetitions=100, seed=1))
    end = time.perf_counter()
    print(
        f"AC9: {n0} mutants, brittleness {b:.3f}, {groups[0]} subsuming groups at v0, "
        f"generation {generated - start:.1f}s, analysis {end - generated:.1f}s"
    )
    assert len(res.repetitions) == 100
    assert end - start < 120
