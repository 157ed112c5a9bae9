import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactsed import errors
from exactsed.core import Event, ScoreTimeline
from exactsed.detection import detect_events, median_filter, segment_bounds, segmentize


def tl(values, step=1.0, start=0.0, classes=("a",)):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return ScoreTimeline(start + np.arange(len(values) + 1) * step, values, classes)


def test_detect_events_merges_runs():
    t = tl([0.1, 0.6, 0.7, 0.2, 0.9])
    assert detect_events(t, "a", 0.5) == [Event(1, 3, "a"), Event(4, 5, "a")]
    assert detect_events(t, "a", 0.9) == []   # strict comparison
    assert detect_events(t, "a", 0.0) == [Event(0, 5, "a")]


def test_median_filter_examples():
    t = tl([0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0])
    assert median_filter(t, 3).scores[:, 0].tolist() == [0, 0, 0, 0, 1, 1, 0]
    assert median_filter(tl([0, 1, 0, 1, 1]), 3).scores[:, 0].tolist() == [0, 0, 1, 1, 1]
    assert median_filter(t, 1) is t
    with pytest.raises(errors.EvenWidth):
        median_filter(t, 4)
    with pytest.raises(errors.NonPositiveWidth):
        median_filter(t, 0)


@settings(max_examples=80, deadline=None)
@given(values=st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 1.0]), min_size=1, max_size=40),
       width=st.sampled_from([1, 3, 5, 7]))
def test_median_filter_commutes_with_thresholding(values, width):
    t = tl(values)
    smoothed = median_filter(t, width)
    for tau in sorted(set(values)) + [-1.0]:
        binary = t.with_scores((t.scores > tau).astype(float))
        expected = detect_events(median_filter(binary, width), "a", 0.5)
        assert detect_events(smoothed, "a", tau) == expected


@settings(max_examples=80, deadline=None)
@given(values=st.lists(st.floats(0, 1), min_size=1, max_size=30), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_detection_shrinks_with_threshold(values, t1, t2):
    lo, hi = sorted((t1, t2))
    t = tl(values, step=0.5)
    high = detect_events(t, "a", hi)
    low = detect_events(t, "a", lo)
    for e in high:
        assert any(f.onset <= e.onset and e.offset <= f.offset for f in low)


def test_segment_bounds():
    assert segment_bounds(3.0, 1.0).tolist() == [0, 1, 2, 3]
    assert segment_bounds(2.5, 1.0).tolist() == [0, 1, 2, 2.5]
    with pytest.raises(errors.NonPositiveSegmentLength):
        segment_bounds(2.0, 0.0)


def test_segmentize_max_and_targets():
    t = tl([0.2, 0.9, 0.4, 0.1], step=0.5)
    scores, targets = segmentize(t, [Event(1.2, 1.6, "a")], 1.0, 3.0)["a"]
    assert scores.tolist() == [0.9, 0.4, -np.inf]
    assert targets.tolist() == [False, True, False]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 30), step=st.sampled_from([0.1, 0.25, 0.3, 1.0]),
       seg=st.sampled_from([0.5, 1.0, 1.7]), extra=st.floats(0, 3))
def test_segments_cover_the_clip(n, step, seg, extra):
    t = tl(np.linspace(0, 1, n), step=step)
    duration = t.end + extra
    bounds = segment_bounds(duration, seg)
    assert bounds[0] == 0 and bounds[-1] == duration
    assert np.all(np.diff(bounds) > 0)
    scores, _ = segmentize(t, [], seg, duration)["a"]
    assert len(scores) == len(bounds) - 1
    # a segment is reachable exactly when some frame overlaps it
    covered = np.minimum(bounds[1:], t.end) > np.maximum(bounds[:-1], t.timestamps[0])
    assert np.array_equal(np.isfinite(scores), covered)
