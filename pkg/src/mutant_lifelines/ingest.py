"""Loading histories from disk, and writing them back in the same formats.

A manifest is JSON::

    {
      "subject": "example",
      "file": "src/main/java/org/example/Parser.java",
      "versions": [
        {"version_id": "a1b2c3", "mutants": "v0/mutants.csv",
         "kills": "v0/kills.csv", "snapshot": "v0/src"},
        {"version_id": "d4e5f6", "mutants": "v1/mutants.csv",
         "kills": "v1/kills.csv", "diff": "v1/to_next.diff"},
        ...
      ]
    }

Paths are relative to the manifest. Every version but the last needs a
``diff`` to the next version, or a ``snapshot`` on both sides. A
``snapshot`` is a directory holding the observed file at its path (or
the file itself). Optional per-version keys: ``file`` (observed path in
that version, for a declared rename) and ``line_count``.

Mutants CSV header: ``id,file,line,inline_ordinal,operator,description``.
Kill CSV: first line ``tests:`` followed by comma-separated test ids,
then one ``mutant_id,test_id`` line per kill.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diffmap import ChangeMap, compute_hunks, format_unified_diff, parse_unified_diff, split_lines
from .errors import (
    CsvSchemaError,
    DuplicateMutantKey,
    InvalidTimeline,
    LifelineError,
    ManifestNotFound,
    ManifestSchemaError,
    MissingArtifactPath,
    MalformedDiff,
    UnknownMutantInMatrix,
    UnknownTestId,
)
from .model import KillMatrix, Mutant, TimePoint, Timeline, validate_timeline
from .parallel import ordered_map

MUTANT_COLUMNS = ["id", "file", "line", "inline_ordinal", "operator", "description"]
TESTS_PREFIX = "tests:"

_ENTRY_KEYS = {"version_id", "mutants", "kills", "diff", "snapshot", "file", "line_count"}


@dataclass(frozen=True)
class VersionEntry:
    version_id: str
    mutants: Path
    kills: Path
    file: str
    diff: Path | None = None
    snapshot: Path | None = None
    line_count: int | None = None


@dataclass(frozen=True)
class Manifest:
    subject: str
    file: str
    entries: tuple[VersionEntry, ...]
    base_dir: Path


def read_text(path: Path) -> str:
    """Byte-preserving read: undecodable bytes survive as surrogates."""
    return Path(path).read_bytes().decode("utf-8", errors="surrogateescape")


def write_text(path: Path, text: str) -> None:
    Path(path).write_bytes(text.encode("utf-8", errors="surrogateescape"))


def load_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestNotFound(str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestSchemaError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ManifestSchemaError(f"{path}: top level must be an object")
    file = raw.get("file")
    versions = raw.get("versions")
    if not isinstance(file, str) or not file:
        raise ManifestSchemaError(f"{path}: 'file' must be a non-empty string")
    if not isinstance(versions, list) or not versions:
        raise ManifestSchemaError(f"{path}: 'versions' must be a non-empty list")
    base = path.parent
    entries = []
    current_file = file
    for pos, v in enumerate(versions):
        if not isinstance(v, dict):
            raise ManifestSchemaError(f"{path}: version #{pos} is not an object")
        unknown = set(v) - _ENTRY_KEYS
        if unknown:
            raise ManifestSchemaError(f"{path}: version #{pos} has unknown keys {sorted(unknown)}")
        vid = v.get("version_id")
        if not isinstance(vid, str) or not vid:
            raise ManifestSchemaError(f"{path}: version #{pos} needs a string version_id")
        label = f"version {vid!r} (#{pos})"

        def artifact(key: str, required: bool) -> Path | None:
            rel = v.get(key)
            if rel is None:
                if required:
                    raise MissingArtifactPath(f"{label}: no '{key}' path")
                return None
            if not isinstance(rel, str):
                raise ManifestSchemaError(f"{label}: '{key}' must be a string path")
            p = base / rel
            if not p.exists():
                raise MissingArtifactPath(f"{label}: '{key}' path {rel} does not exist")
            return p

        line_count = v.get("line_count")
        if line_count is not None and (not isinstance(line_count, int) or line_count < 0):
            raise ManifestSchemaError(f"{label}: line_count must be a non-negative integer")
        current_file = v.get("file", current_file)
        if not isinstance(current_file, str):
            raise ManifestSchemaError(f"{label}: 'file' must be a string")
        entries.append(
            VersionEntry(
                version_id=vid,
                mutants=artifact("mutants", True),
                kills=artifact("kills", True),
                file=current_file,
                diff=artifact("diff", False),
                snapshot=artifact("snapshot", False),
                line_count=line_count,
            )
        )
    for e, nxt in zip(entries, entries[1:]):
        if e.diff is None and (e.snapshot is None or nxt.snapshot is None):
            raise MissingArtifactPath(
                f"version {e.version_id!r}: needs a diff to the next version or snapshots on both sides"
            )
    if len({e.version_id for e in entries}) != len(entries):
        raise ManifestSchemaError(f"{path}: duplicate version ids")
    return Manifest(str(raw.get("subject", "")), file, tuple(entries), base)


def load_mutants(path) -> tuple[Mutant, ...]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MUTANT_COLUMNS:
            raise CsvSchemaError(f"{path}: header must be {','.join(MUTANT_COLUMNS)}, got {header}")
        mutants = []
        seen_keys: dict = {}
        seen_ids: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MUTANT_COLUMNS):
                raise CsvSchemaError(f"{path}:{lineno}: expected {len(MUTANT_COLUMNS)} fields, got {len(row)}")
            mid, file, line, ordinal, op, desc = row
            try:
                line_no, ord_no = int(line), int(ordinal)
            except ValueError:
                raise CsvSchemaError(f"{path}:{lineno}: line and inline_ordinal must be integers") from None
            if line_no < 1 or ord_no < 0 or not mid:
                raise CsvSchemaError(f"{path}:{lineno}: need id, line >= 1, inline_ordinal >= 0")
            if mid in seen_ids:
                raise CsvSchemaError(f"{path}:{lineno}: duplicate mutant id {mid!r}")
            m = Mutant(mid, file, line_no, ord_no, op, desc)
            if m.key in seen_keys:
                raise DuplicateMutantKey(f"{path}:{lineno}: {mid!r} repeats the key of {seen_keys[m.key]!r}")
            seen_ids.add(mid)
            seen_keys[m.key] = mid
            mutants.append(m)
    return tuple(mutants)


def load_kill_matrix(path, mutants: Sequence[Mutant]) -> KillMatrix:
    path = Path(path)
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TESTS_PREFIX):
        raise CsvSchemaError(f"{path}: first line must start with '{TESTS_PREFIX}'")
    declared = lines[0][len(TESTS_PREFIX) :].strip()
    test_ids = next(csv.reader([declared])) if declared else []
    test_ids = [t.strip() for t in test_ids]
    if len(set(test_ids)) != len(test_ids):
        raise CsvSchemaError(f"{path}: duplicate test ids in the test universe")
    ids = [m.id for m in mutants]
    row = {m: i for i, m in enumerate(ids)}
    col = {t: i for i, t in enumerate(test_ids)}
    cells = np.zeros((len(ids), len(test_ids)), dtype=bool)
    for lineno, rec in enumerate(csv.reader(io.StringIO("\n".join(lines[1:]))), start=2):
        if not rec:
            continue
        if len(rec) != 2:
            raise CsvSchemaError(f"{path}:{lineno}: expected mutant_id,test_id")
        mid, tid = rec[0].strip(), rec[1].strip()
        if mid not in row:
            raise UnknownMutantInMatrix(f"{path}:{lineno}: {mid!r}")
        if tid not in col:
            raise UnknownTestId(f"{path}:{lineno}: {tid!r}")
        cells[row[mid], col[tid]] = True
    return KillMatrix(ids, test_ids, cells)


def _snapshot_lines(entry: VersionEntry) -> list[str] | None:
    if entry.snapshot is None:
        return None
    p = entry.snapshot
    if p.is_dir():
        p = p / entry.file
        if not p.is_file():
            raise MissingArtifactPath(f"version {entry.version_id!r}: snapshot lacks {entry.file}")
    return split_lines(read_text(p))


def _annotate(exc: LifelineError, version_id: str) -> LifelineError:
    if isinstance(exc, InvalidTimeline):
        return exc
    return type(exc)(f"{version_id}: {exc}")


def build_timeline(manifest: Manifest, *, validate: bool = True) -> Timeline:
    entries = manifest.entries

    def load(entry: VersionEntry):
        try:
            mutants = load_mutants(entry.mutants)
            kills = load_kill_matrix(entry.kills, mutants)
            return mutants, kills, _snapshot_lines(entry)
        except LifelineError as exc:
            raise _annotate(exc, entry.version_id) from exc

    loaded = ordered_map(load, entries)

    def line_count(i: int) -> int | None:
        snap = loaded[i][2]
        if snap is not None:
            if entries[i].line_count is not None and entries[i].line_count != len(snap):
                raise MalformedDiff(
                    f"{entries[i].version_id}: declared line_count {entries[i].line_count} "
                    f"but snapshot has {len(snap)} lines"
                )
            return len(snap)
        return entries[i].line_count

    points = []
    for i, entry in enumerate(entries):
        mutants, kills, snap = loaded[i]
        line_count(i)  # a declared count must agree with the snapshot
        cm: ChangeMap | None = None
        if i + 1 < len(entries):
            try:
                if entry.diff is not None:
                    cm = parse_unified_diff(read_text(entry.diff), old_line_count=line_count(i))
                    expected_new = line_count(i + 1)
                    if None not in (expected_new, cm.new_line_count) and expected_new != cm.new_line_count:
                        raise MalformedDiff(
                            f"diff yields {cm.new_line_count} lines but the next version has {expected_new}"
                        )
                else:
                    cm = compute_hunks(snap, loaded[i + 1][2])
            except LifelineError as exc:
                raise _annotate(exc, entry.version_id) from exc
            if entries[i + 1].file != entry.file:
                cm = dataclasses.replace(cm, new_file=entries[i + 1].file)
        points.append(TimePoint(entry.version_id, i, mutants, kills, cm))

    timeline = Timeline(manifest.file, tuple(points))
    if validate:
        violations = validate_timeline(timeline)
        if violations:
            raise InvalidTimeline(violations)
    return timeline


def load_timeline(path, *, validate: bool = True) -> Timeline:
    return build_timeline(load_manifest(path), validate=validate)


# --------------------------------------------------------------------------
# writers


def write_mutants_csv(path, mutants: Iterable[Mutant]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MUTANT_COLUMNS)
        for m in mutants:
            w.writerow([m.id, m.file, m.line, m.inline_ordinal, m.operator, m.description])


def write_kill_csv(path, km: KillMatrix) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(TESTS_PREFIX)
    w.writerow(km.test_ids)
    for r, c in zip(*np.nonzero(km.cells)):
        w.writerow([km.mutant_ids[r], km.test_ids[c]])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_manifest(path, subject: str, file: str, versions: list[dict]) -> None:
    payload = {"subject": subject, "file": file, "versions": versions}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")



def write_timeline(
    timeline: Timeline, contents: Sequence[Sequence[str]], out_dir, *, subject: str, layout: str = "diff"
) -> Path:
    """Write ``timeline`` in the loader's formats; returns the manifest path.

    ``contents`` holds every version's lines. ``layout="diff"`` writes a
    snapshot of the first version and a unified diff per transition
    (change maps need hunk bodies); ``"snapshot"`` writes every version.
    """
    if layout not in ("diff", "snapshot"):
        raise ValueError(f"unknown layout {layout!r}")
    if len(contents) != len(timeline.points):
        raise ValueError("need one content list per version")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    file = timeline.file
    versions = []
    for t, tp in enumerate(timeline.points):
        vdir = out / tp.version_id
        vdir.mkdir(exist_ok=True)
        write_mutants_csv(vdir / "mutants.csv", tp.mutants)
        write_kill_csv(vdir / "kills.csv", tp.kills)
        entry = {
            "version_id": tp.version_id,
            "mutants": f"{tp.version_id}/mutants.csv",
            "kills": f"{tp.version_id}/kills.csv",
        }
        if layout == "snapshot" or t == 0:
            target = vdir / "src" / file
            target.parent.mkdir(parents=True, exist_ok=True)
            write_text(target, "".join(contents[t]))
            entry["snapshot"] = f"{tp.version_id}/src"
        if layout == "diff":
            if tp.change_to_next is not None:
                diff = format_unified_diff(tp.change_to_next, f"a/{file}", f"b/{file}")
                write_text(vdir / "to_next.diff", diff)
                entry["diff"] = f"{tp.version_id}/to_next.diff"
            entry["line_count"] = len(contents[t])
        versions.append(entry)
    manifest = out / "manifest.json"
    write_manifest(manifest, subject, file, versions)
    return manifest
