"""Brute-force evaluation at explicit thresholds.

Nothing here shares code with :mod:`exactsed.engine` beyond the detection
primitives and the comparison helpers: detections are built per threshold
and the matching rules are applied literally. Slow on purpose.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from exactsed import errors
from exactsed.core import (
    TIME_EPS,
    CollarParams,
    Dataset,
    IntersectionParams,
    PsdsParams,
    StatisticsCurve,
    meets_ratio,
)
from exactsed.detection import detect_events, segment_bounds


class Counts(NamedTuple):
    n_tp: int
    n_fp: int
    n_ct: tuple = ()


def _overlap(a, b) -> float:
    return max(0.0, min(a.offset, b.offset) - max(a.onset, b.onset))


def _collar_counts(detections, events, class_name, params: CollarParams):
    gts = sorted((e for e in events if e.label == class_name), key=lambda e: (e.onset, e.offset))
    taken = [False] * len(detections)
    tp = 0
    for g in gts:
        off_collar = max(params.offset_collar_min, params.offset_collar_rate * (g.offset - g.onset))
        for i, det in enumerate(detections):  # detections come in onset order
            if taken[i]:
                continue
            if (abs(det.onset - g.onset) <= params.onset_collar + TIME_EPS
                    and abs(det.offset - g.offset) <= off_collar + TIME_EPS):
                taken[i] = True
                tp += 1
                break
    return Counts(tp, len(detections) - tp)


def _intersection_counts(detections, events, class_name, others, params: IntersectionParams):
    same = [e for e in events if e.label == class_name]
    relevant = []
    fp = 0
    ct = [0] * len(others)
    for det in detections:
        length = det.offset - det.onset
        inter = 0.0
        for g in same:
            inter += _overlap(det, g)
        if meets_ratio(inter, length, params.rho_dtc):
            relevant.append(det)
            continue
        fp += 1
        for m, other in enumerate(others):
            cross = 0.0
            for g in events:
                if g.label == other:
                    cross += _overlap(det, g)
            if any(g.label == other for g in events) and meets_ratio(cross, length, params.rho_cttc):
                ct[m] += 1
    tp = 0
    for g in same:
        covered = 0.0
        for det in relevant:
            covered += _overlap(det, g)
        if meets_ratio(covered, g.offset - g.onset, params.rho_gtc):
            tp += 1
    return Counts(tp, fp, tuple(ct))


def _segment_counts(detections, events, class_name, duration, segment_length):
    bounds = segment_bounds(duration, segment_length).tolist()
    tp = fp = 0
    for a, b in zip(bounds[:-1], bounds[1:]):
        positive = any(min(b, d.offset) - max(a, d.onset) > 0 for d in detections)
        if not positive:
            continue
        target = any(e.label == class_name and min(b, e.offset) - max(a, e.onset) > 0
                     for e in events)
        if target:
            tp += 1
        else:
            fp += 1
    return Counts(tp, fp)


def clip_counts(clip, class_name, tau, mode, params=None, segment_length=1.0) -> Counts:
    detections = detect_events(clip.timeline, class_name, tau)
    if mode == "collar":
        return _collar_counts(detections, clip.events, class_name, params or CollarParams())
    if mode == "intersection":
        others = [c for c in clip.timeline.class_names if c != class_name]
        return _intersection_counts(
            detections, clip.events, class_name, others, params or IntersectionParams()
        )
    if mode == "segment":
        return _segment_counts(detections, clip.events, class_name, clip.duration, segment_length)
    raise ValueError(f"unknown mode {mode!r}")


def _add(a: Counts, b: Counts) -> Counts:
    ct = tuple(x + y for x, y in zip(a.n_ct, b.n_ct)) if a.n_ct else b.n_ct
    return Counts(a.n_tp + b.n_tp, a.n_fp + b.n_fp, ct)


def evaluate_at_threshold(
    dataset: Dataset, class_name: str, tau: float, mode: str, params=None,
    segment_length: float = 1.0,
) -> Counts:
    """Dataset-level ``(N_TP, N_FP, N_CT)`` at a single threshold."""
    if class_name not in dataset.class_names:
        raise errors.UnknownClass(f"unknown class {class_name!r}")
    n_other = len(dataset.class_names) - 1 if mode == "intersection" else 0
    total = Counts(0, 0, (0,) * n_other)
    for cid in sorted(dataset.clips):
        total = _add(total, clip_counts(dataset.clips[cid], class_name, tau, mode, params,
                                        segment_length))
    return total


def evaluate_thresholds(
    dataset: Dataset, class_name: str, taus: Sequence[float], mode: str, params=None,
    segment_length: float = 1.0,
) -> list:
    """:func:`evaluate_at_threshold` for many thresholds.

    A clip's detections only depend on which of its own distinct scores lie
    above the threshold, so thresholds falling between the same pair of
    that clip's scores share one evaluation (made at the first such
    threshold requested).
    """
    if class_name not in dataset.class_names:
        raise errors.UnknownClass(f"unknown class {class_name!r}")
    taus = np.asarray(taus, dtype=float)
    n_other = len(dataset.class_names) - 1 if mode == "intersection" else 0
    tp = np.zeros(len(taus), dtype=np.int64)
    fp = np.zeros(len(taus), dtype=np.int64)
    ct = np.zeros((len(taus), n_other), dtype=np.int64)
    for cid in sorted(dataset.clips):
        clip = dataset.clips[cid]
        distinct = np.unique(clip.timeline.column(class_name))
        bins = len(distinct) - np.searchsorted(distinct, taus, side="right")
        cache = {}
        for i, b in enumerate(bins.tolist()):
            if b not in cache:
                cache[b] = clip_counts(clip, class_name, taus[i], mode, params, segment_length)
            c = cache[b]
            tp[i] += c.n_tp
            fp[i] += c.n_fp
            if n_other:
                ct[i] += c.n_ct
    return [Counts(int(a), int(b), tuple(int(x) for x in row)) for a, b, row in zip(tp, fp, ct)]


def sampled_curve(
    dataset: Dataset, class_name: str, thresholds: Sequence[float],
    params: IntersectionParams,
) -> StatisticsCurve:
    """Intersection statistics at the given thresholds only, shaped as a
    :class:`StatisticsCurve` whose rows are the sampled operating points."""
    taus = np.unique(np.asarray(thresholds, dtype=float))[::-1]
    counts = evaluate_thresholds(dataset, class_name, taus, "intersection", params)
    others = tuple(c for c in dataset.class_names if c != class_name)
    n_ct = np.zeros((len(taus) + 1, len(others)), dtype=np.int64)
    for i, c in enumerate(counts):
        n_ct[i + 1] = c.n_ct
    return StatisticsCurve(
        class_name=class_name,
        mode="intersection",
        thresholds=taus,
        n_tp=[0] + [c.n_tp for c in counts],
        n_fp=[0] + [c.n_fp for c in counts],
        n_gp=len(dataset.events_of(class_name)),
        total_duration=dataset.total_duration,
        other_classes=others,
        n_ct=n_ct,
        gt_durations=tuple(dataset.gt_duration(c) for c in others),
    )


def approx_psds(
    dataset: Dataset, thresholds: Sequence[float], intersection: IntersectionParams,
    params: PsdsParams,
):
    """PSDS from operating points at a finite threshold list only.

    Returns ``(psds_value, PsdRoc)``; the same threshold list is applied to
    every class.
    """
    from exactsed import metrics

    if len(thresholds) == 0:
        raise errors.EmptyThresholdList("need at least one threshold")
    curves = {c: sampled_curve(dataset, c, thresholds, intersection)
              for c in dataset.class_names}
    roc = metrics.psd_roc(metrics.class_rocs(curves, params), params)
    return metrics.psds(roc, params), roc
