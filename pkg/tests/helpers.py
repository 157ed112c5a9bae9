"""Random dataset generators and oracle comparison helpers shared by tests."""

import numpy as np

from exactsed.core import Event, ScoreTimeline, validate_dataset
from exactsed.metrics import representative_thresholds
from exactsed import oracle

CLASSES = ("a", "b", "c")


def random_timeline(rng, n_frames, classes=CLASSES, tie_levels=None):
    scheme = rng.integers(3)
    if scheme == 0:
        widths = np.full(n_frames, rng.choice([0.25, 0.5, 1.0]))
    elif scheme == 1:
        widths = np.full(n_frames, rng.choice([0.02, 0.1, 0.2]))
    else:
        widths = rng.uniform(0.05, 1.0, n_frames)
    start = 0.0 if rng.random() < 0.7 else float(rng.choice([0.5, 1.25]))
    timestamps = start + np.concatenate(([0.0], np.cumsum(widths)))
    scores = rng.random((n_frames, len(classes)))
    # deliberate ties: snap part of the frames to a coarse grid
    levels = tie_levels if tie_levels is not None else rng.choice([3, 5, 10])
    snap = rng.random(scores.shape) < 0.6
    scores[snap] = np.round(scores[snap] * levels) / levels
    return ScoreTimeline(timestamps, scores, classes)


def random_events(rng, timeline, duration, n_events, classes=CLASSES):
    ts = timeline.timestamps
    events = []
    for _ in range(n_events):
        label = str(rng.choice(classes))
        if rng.random() < 0.5:
            # align to frame boundaries, exercising exact ratio / collar ties
            a, b = sorted(rng.choice(len(ts), 2, replace=False))
            onset, offset = float(ts[a]), float(ts[b])
        else:
            onset = float(rng.uniform(0, duration * 0.95))
            offset = float(min(duration, onset + rng.uniform(0.05, 5.0)))
        if offset > onset:
            events.append(Event(onset, offset, label))
    return events


def random_dataset(rng, max_clips=20, max_frames=60, max_events=4, classes=CLASSES):
    scores, gt, durations = {}, {}, {}
    for k in range(int(rng.integers(1, max_clips + 1))):
        cid = f"clip{k:03d}"
        timeline = random_timeline(rng, int(rng.integers(1, max_frames + 1)), classes)
        duration = timeline.end + (0.0 if rng.random() < 0.5 else float(rng.uniform(0, 2)))
        scores[cid] = timeline
        durations[cid] = duration
        events = random_events(rng, timeline, duration, int(rng.integers(0, max_events + 1)),
                               classes)
        if events:
            gt[cid] = events
    return validate_dataset(scores, gt, durations)


def probe_thresholds(curve):
    """Every interval midpoint of the curve plus values above and below all scores."""
    reps = representative_thresholds(curve.thresholds)
    if len(curve.thresholds):
        reps = np.concatenate((reps, [curve.thresholds[0] + 1.0, curve.thresholds[-1] - 1.0]))
    return reps


def mismatches(dataset, curves, mode, params, segment_length=1.0):
    """(class, tau, engine counts, oracle counts) wherever the two disagree."""
    bad = []
    for name, curve in curves.items():
        taus = probe_thresholds(curve)
        expected = oracle.evaluate_thresholds(dataset, name, taus, mode, params, segment_length)
        for tau, exp in zip(taus, expected):
            got = curve.at(tau)
            want = (exp.n_tp, exp.n_fp, exp.n_ct if mode == "intersection" else ())
            if got != want:
                bad.append((name, float(tau), got, want))
    return bad
