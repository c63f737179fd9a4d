"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (invalid timeline, empty cohort,
unknown version...), 2 I/O or input-format failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import report
from .errors import DomainError, FormatError, InvalidTimeline
from .ingest import build_timeline, load_manifest
from .lifeline import HeatmapMatrix, corpus_brittleness, newcomers, resample_step, spans_to_curve, thread_mutants
from .model import Timeline, validate_timeline
from .selection import (
    POOLS,
    REFERENCES,
    STRATEGIES,
    SelectionConfig,
    aggregate_normalized,
    mean_relevance,
    prepare,
    run_simulation,
)
from .subsumption import mutation_score, subsuming_set
from .synthetic import SynthConfig, emit_history, generate_history

EXIT_OK, EXIT_DOMAIN, EXIT_FORMAT = 0, 1, 2


class _Source:
    """A timeline to analyse plus the label it is reported under."""

    def __init__(self, label: str, timeline: Timeline):
        self.label = label
        self.timeline = timeline


def _load_synth_config(path: str) -> SynthConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: synthetic config must be a JSON object")
    try:
        return SynthConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from None


def _sources(args, *, validate: bool = True) -> list[_Source]:
    manifests = args.manifest if isinstance(args.manifest, list) else [args.manifest] if args.manifest else []
    out = []
    if args.gen_synthetic:
        cfg = _load_synth_config(args.gen_synthetic)
        tl = generate_history(cfg).timeline
        out.append(_Source(f"synthetic-{cfg.seed}:{tl.file}", tl))
    for path in manifests:
        m = load_manifest(path)
        out.append(_Source(f"{m.subject}:{m.file}", build_timeline(m, validate=validate)))
    if not out:
        raise FormatError("give a manifest path or --gen-synthetic CONFIG")
    seen: dict[str, int] = {}
    for s in out:
        n = seen.get(s.label, 0)
        seen[s.label] = n + 1
        if n:
            s.label = f"{s.label}#{n + 1}"
    return out


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    sources = _sources(args, validate=False)
    status = EXIT_OK
    for s in sources:
        violations = validate_timeline(s.timeline)
        for v in violations:
            print(f"{s.label}: {v}", file=sys.stderr)
        if violations:
            status = EXIT_DOMAIN
        else:
            print(f"{s.label}: ok ({len(s.timeline.points)} versions)")
    return status


def cmd_brittleness(args) -> int:
    sources = _sources(args)
    labels = [s.label for s in sources]
    timelines = [s.timeline for s in sources]
    summary = corpus_brittleness(timelines, labels)
    curves = {}
    for s in sources:
        spans = [lf.standing_span for lf in thread_mutants(s.timeline)]
        curves[s.label] = spans_to_curve(spans, len(s.timeline.points))
    hm = HeatmapMatrix(
        labels=tuple(labels),
        rows=tuple(tuple(resample_step(curves[lb].fractions, args.bins)) for lb in labels),
        bins=args.bins,
    )
    payload = report.brittleness_payload(summary, curves, {s.label: newcomers(s.timeline) for s in sources})
    payload["bins"] = args.bins
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(report.dumps(payload))
        return EXIT_OK
    vids = [[tp.version_id for tp in tl.points] for tl in timelines]
    report.write_csv(out / "brittleness_curves.csv", report.CURVE_HEADER,
                     report.curves_rows(labels, vids, [curves[lb] for lb in labels]))
    report.write_csv(out / "heatmap.csv", report.heatmap_header(hm), report.heatmap_rows(hm))
    report.write_json(out / "heatmap.json", report.heatmap_payload(hm))
    report.write_json(out / "brittleness_summary.json", payload)
    return EXIT_OK


def cmd_subsuming(args) -> int:
    (source,) = _sources(args)
    points = source.timeline.points
    if args.version is not None:
        chosen = [tp for tp in points if tp.version_id == args.version]
        if not chosen:
            raise DomainError(f"{source.label}: version {args.version!r} not in history")
    else:
        chosen = list(points)
    payloads = []
    for tp in chosen:
        result = subsuming_set(tp.kills)
        p = report.subsumption_payload(tp.version_id, result, len(tp.mutants))
        if result.representatives:
            p["subsuming_mutation_score"] = mutation_score(tp.kills, result.representatives)
        payloads.append(p)
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(report.dumps(payloads[0] if args.version is not None else payloads))
        return EXIT_OK
    for p in payloads:
        report.write_json(out / f"subsumption_{p['version_id']}.json", p)
    return EXIT_OK


def cmd_simulate(args) -> int:
    (source,) = _sources(args)
    strategies = args.strategy or list(STRATEGIES)
    if len(set(strategies)) != len(strategies):
        raise FormatError("each --strategy may be given once")
    tl = source.timeline
    context = prepare(tl, args.origin, args.pool)
    results = {}
    for strategy in strategies:
        cfg = SelectionConfig(
            fraction_range=(args.fraction_low, args.fraction_high),
            repetitions=args.reps,
            seed=args.seed,
            strategy=strategy,
            pool=args.pool,
            reference=args.reference,
            origin=args.origin,
        )
        results[strategy] = run_simulation(tl, cfg, context)

    relevance = {s: mean_relevance(r, args.threshold) for s, r in results.items()}
    ratios = {}
    for a in strategies:
        for b in strategies:
            if a != b:
                ratios[f"{a}/{b}"] = relevance[a] / relevance[b] if relevance[b] else math.inf
    payload = {
        "source": source.label,
        "threshold": args.threshold,
        "strategies": {s: report.simulation_summary(r, args.threshold) for s, r in results.items()},
        "relevance_ratios": ratios,
    }
    if args.bins:
        payload["normalized_envelopes"] = {
            s: {"mean": list(e.mean), "min": list(e.min), "max": list(e.max)}
            for s, e in ((s, aggregate_normalized([r], args.bins)) for s, r in results.items())
        }
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(report.dumps(payload))
        return EXIT_OK
    rows = (row for r in results.values() for row in report.simulation_rows(r))
    report.write_csv(out / "simulation.csv", report.SIM_HEADER, rows)
    report.write_json(out / "simulation.json", payload)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _load_synth_config(args.config)
    manifest = emit_history(generate_history(cfg), args.out, layout=args.layout)
    print(manifest)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1]")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mutant-lifelines", description="Track mutants across file versions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, many: bool = False) -> None:
        p.add_argument("manifest", nargs="*" if many else "?", help="manifest JSON")
        p.add_argument("--gen-synthetic", metavar="CONFIG", help="synthetic config JSON used instead of a manifest")

    p = sub.add_parser("validate", help="check a history for structural problems")
    common(p, many=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("brittleness", help="standing-fraction curves and heatmap")
    common(p, many=True)
    p.add_argument("--bins", type=_positive, default=10)
    p.add_argument("--out", help="output directory (default: summary JSON on stdout)")
    p.set_defaults(func=cmd_brittleness)

    p = sub.add_parser("subsuming", help="subsuming mutant groups per version")
    common(p)
    p.add_argument("--version", help="version id (default: every version)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_subsuming)

    p = sub.add_parser("simulate", help="selection strategies followed through the history")
    common(p)
    p.add_argument("--strategy", action="append", choices=STRATEGIES, help="repeatable; default: all")
    p.add_argument("--fraction-low", type=_fraction, default=0.10)
    p.add_argument("--fraction-high", type=_fraction, default=0.30)
    p.add_argument("--reps", type=_positive, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool", choices=POOLS, default="all_mutants")
    p.add_argument("--reference", choices=REFERENCES, default="fresh")
    p.add_argument("--origin", type=int, default=0, help="index of the version where selection happens")
    p.add_argument("--threshold", type=float, default=0.9, help="survival threshold for relevance")
    p.add_argument("--bins", type=int, default=10, help="normalized envelope bins (0 disables)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write a synthetic history in ingest format")
    p.add_argument("config", help="synthetic config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--layout", choices=("diff", "snapshot"), default="diff")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "fraction_low", 0) > getattr(args, "fraction_high", 1):
        parser.error("--fraction-low must not exceed --fraction-high")
    if getattr(args, "bins", 2) == 1:
        parser.error("--bins must be 0 or at least 2")
    try:
        return args.func(args)
    except InvalidTimeline as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FormatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
