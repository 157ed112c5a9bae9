"""Exact intermediate statistics for every decision threshold at once.

Lowering the threshold ``tau`` past a distinct score value switches on all
frames with that score. The detections that exist at some threshold form a
tree over the frames: a detection is *born* at the lowest score inside its
run of frames and *dies* when the threshold passes the higher of its two
neighbouring frame scores, at which point it is absorbed into a longer
detection. Every per-detection quantity (false positive, cross trigger)
therefore changes the counts exactly twice, at birth and at death, and the
per-ground-truth quantities only change when a detection touching that
ground truth is born or dies. The signed changes ("deltas") per distinct
score are summed over clips and cumulated into a :class:`StatisticsCurve`.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from exactsed import errors
from exactsed.core import (
    TIME_EPS,
    CollarParams,
    Dataset,
    IntersectionParams,
    ScoreTimeline,
    StatisticsCurve,
    meets_ratio,
)
from exactsed.detection import segmentize

MODES = ("collar", "intersection", "segment")


class DeltaRecord(NamedTuple):
    score: float
    d_tp: int
    d_fp: int
    d_ct: tuple = ()


@dataclass(frozen=True, eq=False)
class Deltas:
    """Count changes at distinct scores (descending) of one clip and class.

    ``d_ct[i, m]`` is the cross-trigger change against ``other_classes[m]``.
    """

    scores: np.ndarray
    d_tp: np.ndarray
    d_fp: np.ndarray
    d_ct: np.ndarray
    other_classes: tuple = ()

    def records(self) -> list:
        return [
            DeltaRecord(float(s), int(tp), int(fp), tuple(int(x) for x in ct))
            for s, tp, fp, ct in zip(self.scores, self.d_tp, self.d_fp, self.d_ct)
        ]

    def __len__(self):
        return len(self.scores)


def _deltas(scores, d_tp, d_fp, d_ct=None, other_classes=()):
    n = len(scores)
    if d_ct is None:
        d_ct = np.zeros((n, len(other_classes)), dtype=np.int64)
    return Deltas(
        np.asarray(scores, dtype=float),
        np.asarray(d_tp, dtype=np.int64),
        np.asarray(d_fp, dtype=np.int64),
        np.asarray(d_ct, dtype=np.int64).reshape(n, len(other_classes)),
        tuple(other_classes),
    )


# -- detection tree ------------------------------------------------------------------

class DetectionTree(NamedTuple):
    """All detections a clip-class column can produce.

    ``levels`` are the distinct scores, descending. Detection ``i`` spans
    ``[onset[i], offset[i])`` and exists for thresholds below
    ``levels[birth[i]]`` but not below ``levels[death[i]]``; ``death`` equals
    ``len(levels)`` for the detection covering the whole timeline.
    ``parent[i]`` is the detection absorbing ``i`` (-1 for the root) and
    ``frame_node[f]`` the smallest detection containing frame ``f``.
    """

    levels: np.ndarray
    timestamps: np.ndarray
    onset: np.ndarray
    offset: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    parent: np.ndarray
    frame_node: np.ndarray


def _run_extents(values: list) -> tuple:
    """For each frame, the first and last index of the run of frames scoring
    ``>=`` its own score (nearest strictly smaller neighbour on each side)."""
    n = len(values)
    left = [0] * n
    right = [n - 1] * n
    stack = []
    for i, v in enumerate(values):
        while stack and values[stack[-1]] >= v:
            stack.pop()
        left[i] = stack[-1] + 1 if stack else 0
        stack.append(i)
    stack.clear()
    for i in range(n - 1, -1, -1):
        v = values[i]
        while stack and values[stack[-1]] >= v:
            stack.pop()
        right[i] = stack[-1] - 1 if stack else n - 1
        stack.append(i)
    return np.array(left, dtype=np.int64), np.array(right, dtype=np.int64)


def detection_tree(timestamps: np.ndarray, column: np.ndarray) -> DetectionTree:
    column = np.asarray(column, dtype=float)
    n = len(column)
    ascending = np.unique(column)
    levels = ascending[::-1]
    n_levels = len(levels)

    left, right = _run_extents(column.tolist())
    _, first, frame_node = np.unique(left * n + right, return_index=True, return_inverse=True)
    frame_node = frame_node.reshape(-1)
    lo, hi = left[first], right[first]

    def level_index(values):
        return n_levels - 1 - np.searchsorted(ascending, values)

    birth = level_index(column[first])
    left_score = np.where(lo > 0, column[np.maximum(lo - 1, 0)], -np.inf)
    right_score = np.where(hi < n - 1, column[np.minimum(hi + 1, n - 1)], -np.inf)
    use_left = left_score >= right_score
    neighbour = np.where(use_left, left_score, right_score)
    finite = np.isfinite(neighbour)
    death = np.full(len(first), n_levels, dtype=np.int64)
    death[finite] = level_index(neighbour[finite])
    parent = np.full(len(first), -1, dtype=np.int64)
    neighbour_frame = np.where(use_left, lo - 1, hi + 1)
    parent[finite] = frame_node[neighbour_frame[finite]]

    ts = np.asarray(timestamps, dtype=float)
    return DetectionTree(levels, ts, ts[lo], ts[hi + 1], birth, death, parent, frame_node)


def _birth_death_counts(tree: DetectionTree, flags=None) -> np.ndarray:
    """Change per level in the number of existing detections with ``flags`` set."""
    n = len(tree.levels)
    birth, death = tree.birth, tree.death
    if flags is not None:
        birth, death = birth[flags], death[flags]
    death = death[death < n]
    return np.bincount(birth, minlength=n) - np.bincount(death, minlength=n)


# -- segment mode -------------------------------------------------------------------

def segment_deltas(pairs) -> Deltas:
    """Deltas for single-instance evaluation of ``(score, target)`` pairs.

    Accepts a sequence of pairs or a ``(scores, targets)`` tuple of arrays.
    All instances sharing a score flip together, so the detection count rises
    by the size of the tie group at that score.
    """
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        scores, targets = pairs
    else:
        pairs = list(pairs)
        scores = np.array([p[0] for p in pairs], dtype=float)
        targets = np.array([bool(p[1]) for p in pairs], dtype=bool)
    scores = np.asarray(scores, dtype=float)
    targets = np.asarray(targets, dtype=bool)
    if len(scores) == 0:
        return _deltas([], [], [])
    ascending, inverse = np.unique(scores, return_inverse=True)
    n = len(ascending)
    tp = np.bincount(inverse, weights=targets, minlength=n).astype(np.int64)
    total = np.bincount(inverse, minlength=n)
    return _deltas(ascending[::-1], tp[::-1], (total - tp)[::-1])


# -- collar mode ------------------------------------------------------------------

def _sorted_gt(gt, class_name):
    return sorted((e for e in gt if e.label == class_name), key=lambda e: (e.onset, e.offset))


def _onset_clusters(events: list, onset_collar: float) -> list:
    """Split onset-sorted events into groups that can never compete for the
    same detection (their onsets are more than two collars apart)."""
    clusters = []
    for e in events:
        if clusters and e.onset - clusters[-1][-1].onset <= 2 * onset_collar + 4 * TIME_EPS:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return clusters


def _collar_tp_deltas(tree: DetectionTree, events: list, params: CollarParams) -> np.ndarray:
    n_levels = len(tree.levels)
    d_tp = np.zeros(n_levels, dtype=np.int64)
    if not events:
        return d_tp
    d = params.onset_collar
    order = np.argsort(tree.onset, kind="stable")
    onset = tree.onset[order]
    offset = tree.offset[order]
    birth = tree.birth[order]
    death = tree.death[order]

    for cluster in _onset_clusters(events, d):
        gon = np.array([e.onset for e in cluster])
        goff = np.array([e.offset for e in cluster])
        off_collar = params.offset_collar(goff - gon)
        a = np.searchsorted(onset, gon[0] - d - 2 * TIME_EPS, side="left")
        b = np.searchsorted(onset, gon[-1] + d + 2 * TIME_EPS, side="right")
        if a >= b:
            continue
        matches = (
            (np.abs(onset[a:b, None] - gon[None, :]) <= d + TIME_EPS)
            & (np.abs(offset[a:b, None] - goff[None, :]) <= off_collar[None, :] + TIME_EPS)
        )
        keep = matches.any(axis=1)
        if not keep.any():
            continue
        matches = matches[keep]
        c_birth = birth[a:b][keep]
        c_death = death[a:b][keep]
        changes = np.unique(np.concatenate([c_birth, c_death[c_death < n_levels]]))
        matched_before = 0
        for k in changes.tolist():
            free = (c_birth <= k) & (c_death > k)
            matched = 0
            # ground truths in onset order each take the earliest free candidate
            for j in range(matches.shape[1]):
                hits = np.flatnonzero(free & matches[:, j])
                if hits.size:
                    free[hits[0]] = False
                    matched += 1
            d_tp[k] += matched - matched_before
            matched_before = matched
    return d_tp


def collar_deltas(timeline: ScoreTimeline, gt, class_name: str, params: CollarParams) -> Deltas:
    """Collar-based TP/FP deltas of one clip and class.

    Ground truths are matched one-to-one: in onset order, each takes the
    earliest-onset unmatched detection whose onset lies within the onset
    collar and whose offset lies within the ground truth's offset collar.
    """
    column = timeline.column(class_name)
    tree = detection_tree(timeline.timestamps, column)
    d_det = _birth_death_counts(tree)
    d_tp = _collar_tp_deltas(tree, _sorted_gt(gt, class_name), params)
    return _deltas(tree.levels, d_tp, d_det - d_tp)


# -- intersection mode -------------------------------------------------------------

def _overlap_pairs(tree: DetectionTree, events: list) -> tuple:
    """All (event index, detection index, overlap) triples with positive
    overlap, ordered by event index then detection index.

    A detection overlaps an event iff it starts inside the event or covers
    the event's onset; the latter detections are the ancestors of the
    smallest detection holding the frame at the onset.
    """
    g = len(events)
    empty = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
    if g == 0:
        return empty
    gon = np.array([e.onset for e in events])
    goff = np.array([e.offset for e in events])

    order = np.argsort(tree.onset, kind="stable")
    sorted_onset = tree.onset[order]
    a = np.searchsorted(sorted_onset, gon, side="left")
    b = np.searchsorted(sorted_onset, goff, side="left")
    counts = b - a
    ev_parts = [np.repeat(np.arange(g), counts)]
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    node_parts = [order[np.repeat(a, counts) + offsets]]

    frame = np.searchsorted(tree.timestamps, gon, side="right") - 1
    inside = (frame >= 0) & (frame < len(tree.frame_node))
    cur_ev = np.flatnonzero(inside)
    cur = tree.frame_node[frame[inside]]
    while cur.size:
        take = tree.onset[cur] < gon[cur_ev]
        ev_parts.append(cur_ev[take])
        node_parts.append(cur[take])
        cur = tree.parent[cur]
        keep = cur >= 0
        cur, cur_ev = cur[keep], cur_ev[keep]

    ev = np.concatenate(ev_parts)
    nodes = np.concatenate(node_parts)
    if ev.size == 0:
        return empty
    sort = np.lexsort((nodes, ev))
    ev, nodes = ev[sort], nodes[sort]
    ov = np.maximum(
        np.minimum(tree.offset[nodes], goff[ev]) - np.maximum(tree.onset[nodes], gon[ev]), 0.0
    )
    return ev, nodes, ov


def intersection_deltas(
    timeline: ScoreTimeline, gt_all, class_name: str, params: IntersectionParams
) -> Deltas:
    """Intersection-based TP/FP/cross-trigger deltas of one clip and class.

    ``gt_all`` holds the clip's ground truth of every class; events of other
    classes feed the cross-trigger counts. Intersections with several
    ground-truth events are summed.
    """
    column = timeline.column(class_name)
    others = tuple(c for c in timeline.class_names if c != class_name)
    tree = detection_tree(timeline.timestamps, column)
    n_nodes = len(tree.onset)
    n_levels = len(tree.levels)
    length = tree.offset - tree.onset

    same = [e for e in gt_all if e.label == class_name]
    ev, nodes, ov = _overlap_pairs(tree, same)
    # summed in event order, like a plain loop over the ground truth
    dtc = np.bincount(nodes, weights=ov, minlength=n_nodes)
    relevant = meets_ratio(dtc, length, params.rho_dtc)
    false_pos = ~relevant

    d_fp = _birth_death_counts(tree, false_pos)
    d_ct = np.zeros((n_levels, len(others)), dtype=np.int64)
    for m, other in enumerate(others):
        _, o_nodes, o_ov = _overlap_pairs(tree, [e for e in gt_all if e.label == other])
        if o_nodes.size:
            cross = np.bincount(o_nodes, weights=o_ov, minlength=n_nodes)
            triggers = false_pos & meets_ratio(cross, length, params.rho_cttc)
            d_ct[:, m] = _birth_death_counts(tree, triggers)

    d_tp = np.zeros(n_levels, dtype=np.int64)
    keep = relevant[nodes]
    ev, nodes, ov = ev[keep], nodes[keep], ov[keep]
    bounds = np.searchsorted(ev, np.arange(len(same) + 1))
    for j, event in enumerate(same):
        sl = slice(bounds[j], bounds[j + 1])
        if bounds[j] == bounds[j + 1]:
            continue
        touching, contrib = nodes[sl], ov[sl]
        dies = tree.death[touching] < n_levels
        level = np.concatenate((tree.birth[touching], tree.death[touching][dies]))
        change = np.concatenate((contrib, -contrib[dies]))
        order = np.argsort(level, kind="stable")
        level, covered = level[order], np.cumsum(change[order])
        last = np.r_[level[1:] != level[:-1], True]
        hit = meets_ratio(covered[last], event.length, params.rho_gtc).astype(np.int64)
        d_tp[level[last]] += np.diff(hit, prepend=0)
    return _deltas(tree.levels, d_tp, d_fp, d_ct, others)


# -- accumulation -------------------------------------------------------------------

@dataclass(frozen=True)
class Totals:
    class_name: str
    mode: str
    n_gp: int
    total_duration: float
    other_classes: tuple = ()
    gt_durations: tuple = ()
    n_gn: Optional[int] = None


def accumulate(deltas: Sequence[Deltas], totals: Totals) -> StatisticsCurve:
    """Merge one class's deltas over clips and cumulate them per threshold."""
    n_other = len(totals.other_classes)
    parts = [d for d in deltas if len(d)]
    if not parts:
        empty = np.zeros(1, dtype=np.int64)
        return _curve(totals, np.zeros(0), empty, empty, np.zeros((1, n_other), dtype=np.int64))

    scores = np.concatenate([d.scores for d in parts])
    ascending, inverse = np.unique(scores, return_inverse=True)
    n = len(ascending)

    def merged(values):
        summed = np.bincount(inverse, weights=values, minlength=n)
        return np.concatenate(([0], np.cumsum(np.rint(summed[::-1]).astype(np.int64))))

    n_tp = merged(np.concatenate([d.d_tp for d in parts]))
    n_fp = merged(np.concatenate([d.d_fp for d in parts]))
    n_ct = np.zeros((n + 1, n_other), dtype=np.int64)
    if n_other:
        ct = np.concatenate([d.d_ct for d in parts])
        for m in range(n_other):
            n_ct[:, m] = merged(ct[:, m])
    for name, values in (("TP", n_tp), ("FP", n_fp), ("CT", n_ct)):
        if values.size and values.min() < 0:
            raise errors.NegativeCumulativeCount(
                f"cumulative {name} count of class {totals.class_name!r} went negative"
            )
    return _curve(totals, ascending[::-1], n_tp, n_fp, n_ct)


def _curve(totals, thresholds, n_tp, n_fp, n_ct):
    return StatisticsCurve(
        class_name=totals.class_name,
        mode=totals.mode,
        thresholds=thresholds,
        n_tp=n_tp,
        n_fp=n_fp,
        n_gp=totals.n_gp,
        total_duration=totals.total_duration,
        other_classes=totals.other_classes,
        n_ct=n_ct,
        gt_durations=totals.gt_durations,
        n_gn=totals.n_gn,
    )


# -- dataset level -------------------------------------------------------------------

def default_params(mode: str):
    if mode == "collar":
        return CollarParams()
    if mode == "intersection":
        return IntersectionParams()
    if mode == "segment":
        return None
    raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")


def clip_deltas(clip, mode: str, params, class_names, segment_length: float = 1.0) -> dict:
    """Deltas of every requested class for a single clip.

    In segment mode each value is ``(deltas, n_positive_segments,
    n_negative_segments)``.
    """
    timeline, events = clip.timeline, clip.events
    out = {}
    if mode == "segment":
        segments = segmentize(timeline, events, segment_length, clip.duration)
        for name in class_names:
            seg_scores, targets = segments[name]
            reachable = np.isfinite(seg_scores)
            out[name] = (
                segment_deltas((seg_scores[reachable], targets[reachable])),
                int(targets.sum()),
                int((~targets).sum()),
            )
        return out
    for name in class_names:
        if mode == "collar":
            out[name] = collar_deltas(timeline, events, name, params)
        elif mode == "intersection":
            out[name] = intersection_deltas(timeline, events, name, params)
        else:
            raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    return out


def _clip_task(args):
    return clip_deltas(*args)


def statistics_curves(
    dataset: Dataset,
    mode: str,
    params=None,
    *,
    segment_length: float = 1.0,
    classes: Optional[Sequence[str]] = None,
    jobs: int = 1,
) -> dict:
    """Exact :class:`StatisticsCurve` per class over the whole dataset.

    Clips are processed independently (in ``jobs`` worker processes when
    ``jobs > 1``); the reduction is ordered by clip id, so the result does
    not depend on ``jobs``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    if params is None:
        params = default_params(mode)
    all_classes = dataset.class_names
    class_names = tuple(all_classes if classes is None else classes)
    for name in class_names:
        if name not in all_classes:
            raise errors.UnknownClass(f"unknown class {name!r}")

    tasks = [(dataset.clips[cid], mode, params, class_names, segment_length)
             for cid in sorted(dataset.clips)]
    if jobs > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_clip = list(pool.map(_clip_task, tasks, chunksize=chunk))
    else:
        per_clip = [_clip_task(t) for t in tasks]

    total = dataset.total_duration
    curves = {}
    for name in class_names:
        others = tuple(c for c in all_classes if c != name)
        if mode == "segment":
            parts = [r[name] for r in per_clip]
            totals = Totals(
                name, mode,
                n_gp=sum(p[1] for p in parts),
                total_duration=total,
                n_gn=sum(p[2] for p in parts),
            )
            curves[name] = accumulate([p[0] for p in parts], totals)
        else:
            totals = Totals(
                name, mode,
                n_gp=len(dataset.events_of(name)),
                total_duration=total,
                other_classes=others if mode == "intersection" else (),
                gt_durations=tuple(dataset.gt_duration(c) for c in others)
                if mode == "intersection" else (),
            )
            curves[name] = accumulate([r[name] for r in per_clip], totals)
    return curves
