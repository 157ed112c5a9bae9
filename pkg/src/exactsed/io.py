"""Tab-separated input formats and curve report serialisation.

Inputs:

* ``scores/<clip_id>.tsv``: header ``onset offset <class>...``, one row per
  frame, each row starting where the previous one ended.
* ``ground_truth.tsv``: header ``filename onset offset event_label``.
* ``durations.tsv``: header ``filename duration``.

The clip id is the file name without its extension.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from exactsed import errors
from exactsed.core import Dataset, Event, ScoreTimeline, validate_dataset

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NON_FINITE = re.compile(r"[+-]?(?:nan|inf|infinity)", re.IGNORECASE)

GT_HEADER = ["filename", "onset", "offset", "event_label"]
DURATIONS_HEADER = ["filename", "duration"]


def _lines(text: str) -> list:
    """Non-blank lines with their 1-based line numbers."""
    return [(i, line.rstrip("\r")) for i, line in enumerate(text.split("\n"), 1)
            if line.strip()]


def _number(cell: str, line: int, what: str) -> float:
    cell = cell.strip()
    if _NUMBER.fullmatch(cell):
        return float(cell)
    if _NON_FINITE.fullmatch(cell):
        raise errors.NonFiniteScore(f"non-finite {what} {cell!r}", line)
    raise errors.MalformedRow(f"cannot parse {what} {cell!r} as a decimal number", line)


def _fields(line: str, n: int, lineno: int) -> list:
    cells = line.split("\t")
    if len(cells) != n:
        raise errors.MalformedRow(f"expected {n} tab-separated fields, got {len(cells)}", lineno)
    return cells


def clip_id(filename: str) -> str:
    return os.path.splitext(os.path.basename(filename.strip()))[0]


def parse_score_file(text: str) -> ScoreTimeline:
    rows = _lines(text)
    if not rows:
        raise errors.BadHeader("empty score file", 1)
    lineno, header = rows[0]
    names = [c.strip() for c in header.split("\t")]
    if len(names) < 3 or names[:2] != ["onset", "offset"] or any(not c for c in names[2:]):
        raise errors.BadHeader(
            "score header must be 'onset<TAB>offset<TAB><class>...'", lineno
        )
    classes = names[2:]
    if len(set(classes)) != len(classes):
        raise errors.BadHeader(f"duplicate class columns in {classes}", lineno)
    if len(rows) < 2:
        raise errors.MalformedRow("score file has no frames", lineno)

    timestamps = []
    scores = []
    for lineno, line in rows[1:]:
        cells = _fields(line, len(names), lineno)
        onset = _number(cells[0], lineno, "onset")
        offset = _number(cells[1], lineno, "offset")
        if not offset > onset or onset < 0:
            raise errors.NonMonotoneTimestamps(
                f"frame [{onset}, {offset}) must have 0 <= onset < offset", lineno
            )
        if timestamps:
            if onset != timestamps[-1]:
                raise errors.NonContiguousRows(
                    f"frame starts at {onset} but the previous one ended at {timestamps[-1]}",
                    lineno,
                )
        else:
            timestamps.append(onset)
        timestamps.append(offset)
        scores.append([_number(c, lineno, "score") for c in cells[2:]])
    return ScoreTimeline(np.array(timestamps), np.array(scores), tuple(classes))


def parse_ground_truth(text: str) -> dict:
    """Events per clip id, in file order."""
    rows = _lines(text)
    if not rows or [c.strip() for c in rows[0][1].split("\t")] != GT_HEADER:
        raise errors.BadHeader("ground-truth header must be '" + "\t".join(GT_HEADER) + "'", 1)
    out = {}
    for lineno, line in rows[1:]:
        name, onset, offset, label = _fields(line, 4, lineno)
        onset = _number(onset, lineno, "onset")
        offset = _number(offset, lineno, "offset")
        label = label.strip()
        if onset < 0:
            raise errors.NegativeOnset(f"negative onset {onset}", lineno)
        if not offset > onset:
            raise errors.OffsetNotAfterOnset(f"offset {offset} not after onset {onset}", lineno)
        if not label:
            raise errors.MalformedRow("empty event label", lineno)
        out.setdefault(clip_id(name), []).append(Event(onset, offset, label))
    return out


def parse_durations(text: str) -> dict:
    rows = _lines(text)
    if not rows or [c.strip() for c in rows[0][1].split("\t")] != DURATIONS_HEADER:
        raise errors.BadHeader(
            "durations header must be '" + "\t".join(DURATIONS_HEADER) + "'", 1
        )
    out = {}
    for lineno, line in rows[1:]:
        name, value = _fields(line, 2, lineno)
        cid = clip_id(name)
        if cid in out:
            raise errors.DuplicateClip(f"clip {cid!r} listed twice", lineno)
        duration = _number(value, lineno, "duration")
        if not (math.isfinite(duration) and duration > 0):
            raise errors.NonPositiveDuration(f"clip {cid!r}: duration {duration}", lineno)
        out[cid] = duration
    return out


# -- writers for the input formats (exact round trip) --------------------------------

def format_score_file(timeline: ScoreTimeline) -> str:
    out = ["\t".join(("onset", "offset") + timeline.class_names)]
    ts = timeline.timestamps.tolist()
    for i, row in enumerate(timeline.scores.tolist()):
        out.append("\t".join([repr(ts[i]), repr(ts[i + 1])] + [repr(v) for v in row]))
    return "\n".join(out) + "\n"


def format_ground_truth(ground_truth: Mapping[str, Sequence[Event]], extension=".wav") -> str:
    out = ["\t".join(GT_HEADER)]
    for cid in sorted(ground_truth):
        for e in ground_truth[cid]:
            out.append(f"{cid}{extension}\t{e.onset!r}\t{e.offset!r}\t{e.label}")
    return "\n".join(out) + "\n"


def format_durations(durations: Mapping[str, float], extension=".wav") -> str:
    out = ["\t".join(DURATIONS_HEADER)]
    out += [f"{cid}{extension}\t{float(durations[cid])!r}" for cid in sorted(durations)]
    return "\n".join(out) + "\n"


# -- dataset directories --------------------------------------------------------------

def _read_score(path):
    try:
        return parse_score_file(Path(path).read_text(encoding="utf-8"))
    except errors.ValidationError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def load_dataset(scores_dir, ground_truth_path, durations_path, jobs: int = 1) -> Dataset:
    """Read and validate a dataset; score files are parsed in clip-id order."""
    files = sorted(Path(scores_dir).glob("*.tsv"), key=lambda p: p.stem)
    if not files:
        raise errors.MissingClip(f"no score files (*.tsv) in {scores_dir}")
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            timelines = list(pool.map(_read_score, files, chunksize=max(1, len(files) // (4 * jobs))))
    else:
        timelines = [_read_score(p) for p in files]
    scores = {p.stem: t for p, t in zip(files, timelines)}
    gt = parse_ground_truth(Path(ground_truth_path).read_text(encoding="utf-8"))
    durations = parse_durations(Path(durations_path).read_text(encoding="utf-8"))
    return validate_dataset(scores, gt, durations)


def write_dataset(dataset: Dataset, directory) -> tuple:
    """Write ``scores/``, ``ground_truth.tsv`` and ``durations.tsv`` under ``directory``."""
    root = Path(directory)
    (root / "scores").mkdir(parents=True, exist_ok=True)
    scores, gt, durations = dataset.as_mappings()
    for cid, timeline in scores.items():
        (root / "scores" / f"{cid}.tsv").write_text(format_score_file(timeline), encoding="utf-8")
    (root / "ground_truth.tsv").write_text(format_ground_truth(gt), encoding="utf-8")
    (root / "durations.tsv").write_text(format_durations(durations), encoding="utf-8")
    return root / "scores", root / "ground_truth.tsv", root / "durations.tsv"


# -- reports -----------------------------------------------------------------------------

REPORT_KINDS = ("pr", "roc", "psd_roc", "summary")


@dataclass
class CurveReport:
    """Tabular curve data plus the configuration that produced it.

    ``points`` are dicts sharing the keys in ``columns``; ``extra`` holds
    report-level values (scalar metrics, per-class arrays) emitted at the
    top level of the JSON form.
    """

    kind: str
    columns: tuple
    points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    sort_key: tuple = ()

    def __post_init__(self):
        if self.kind not in REPORT_KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")
        if self.sort_key:
            self.points = sorted(self.points, key=lambda p: tuple(p[k] for k in self.sort_key))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == 0:
            return "0"
        return format(value, ".12g")
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in (value.tolist() if isinstance(value, np.ndarray) else value)]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return float(format(value, ".12g")) + 0.0
    return value


def write_report(report: CurveReport, fmt: str = "json") -> str:
    """Serialise deterministically (sorted keys, 12 significant digits)."""
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for p in report.points:
            writer.writerow([_fmt(p[c]) for c in report.columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "kind": report.kind,
            "metadata": _jsonable(report.metadata),
            "points": [{c: _jsonable(p[c]) for c in report.columns} for p in report.points],
        }
        doc.update(_jsonable(report.extra))
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def dataset_fingerprint(dataset: Dataset) -> str:
    """Content hash of a dataset, stable across runs and platforms."""
    import hashlib

    h = hashlib.sha256()
    scores, gt, durations = dataset.as_mappings()
    for cid in sorted(scores):
        h.update(format_score_file(scores[cid]).encode())
    h.update(format_ground_truth(gt).encode())
    h.update(format_durations(durations).encode())
    return h.hexdigest()[:16]
