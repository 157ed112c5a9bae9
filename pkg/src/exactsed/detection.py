"""Thresholding, median filtering and segmentation of score timelines."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from exactsed import errors
from exactsed.core import Event, ScoreTimeline


def positive_runs(mask: np.ndarray) -> tuple:
    """Start and (exclusive) end frame indices of the runs of True in ``mask``."""
    padded = np.concatenate(([0], np.asarray(mask, dtype=np.int8), [0]))
    change = np.diff(padded)
    return np.flatnonzero(change == 1), np.flatnonzero(change == -1)


def detect_events(timeline: ScoreTimeline, class_name: str, tau: float) -> list:
    """Merge consecutive frames scoring strictly above ``tau`` into events."""
    column = timeline.column(class_name)
    starts, stops = positive_runs(column > tau)
    ts = timeline.timestamps
    return [Event(ts[a], ts[b], class_name) for a, b in zip(starts.tolist(), stops.tolist())]


def median_filter(timeline: ScoreTimeline, width_frames: int) -> ScoreTimeline:
    """Centered running median per class column, replicating edge frames.

    An odd window makes every output an actual input value, so filtering
    commutes with thresholding: ``median(x) > tau`` iff the median of the
    binary values ``x > tau`` is 1.
    """
    if width_frames <= 0:
        raise errors.NonPositiveWidth(f"median filter width must be positive, got {width_frames}")
    if width_frames % 2 == 0:
        raise errors.EvenWidth(f"median filter width must be odd, got {width_frames}")
    if width_frames == 1:
        return timeline
    half = width_frames // 2
    padded = np.pad(timeline.scores, ((half, half), (0, 0)), mode="edge")
    windows = sliding_window_view(padded, width_frames, axis=0)
    return timeline.with_scores(np.median(windows, axis=-1))


def segment_bounds(duration: float, segment_length: float) -> np.ndarray:
    if not segment_length > 0:
        raise errors.NonPositiveSegmentLength(
            f"segment length must be positive, got {segment_length}"
        )
    n = max(1, math.ceil(duration / segment_length - 1e-9))
    bounds = np.arange(n + 1, dtype=float) * segment_length
    bounds[-1] = duration
    return bounds


def segmentize(timeline: ScoreTimeline, gt, segment_length: float, duration: float) -> dict:
    """Per-class ``(segment_scores, segment_targets)`` over ``[0, duration)``.

    A segment's score is the maximum score of the frames overlapping it with
    positive length. Segments no frame reaches get ``-inf``: they can never be
    classified positive. A target is set when a same-class ground-truth
    event overlaps the segment with positive length.
    """
    bounds = segment_bounds(duration, segment_length)
    lo, hi = bounds[:-1], bounds[1:]
    ts = timeline.timestamps
    first = np.searchsorted(ts[1:], lo, side="right")
    last = np.searchsorted(ts[:-1], hi, side="left")

    out = {}
    for k, name in enumerate(timeline.class_names):
        column = timeline.scores[:, k]
        seg_scores = np.full(len(lo), -np.inf)
        for s, (a, b) in enumerate(zip(first.tolist(), last.tolist())):
            if a < b:
                seg_scores[s] = column[a:b].max()
        targets = np.zeros(len(lo), dtype=bool)
        for event in gt:
            if event.label == name:
                targets |= (np.minimum(hi, event.offset) - np.maximum(lo, event.onset)) > 0
        out[name] = (seg_scores, targets)
    return out
