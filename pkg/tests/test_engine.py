import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactsed import errors
from exactsed.core import CollarParams, Event, IntersectionParams, ScoreTimeline
from exactsed.engine import (
    DeltaRecord,
    Totals,
    accumulate,
    collar_deltas,
    detection_tree,
    intersection_deltas,
    segment_deltas,
    statistics_curves,
    _deltas,
)
from exactsed.detection import detect_events
from exactsed.io import load_dataset

from helpers import mismatches, random_dataset

R = DeltaRecord


@pytest.fixture(scope="module")
def toy():
    from conftest import TOY
    return load_dataset(TOY / "scores", TOY / "ground_truth.tsv", TOY / "durations.tsv")


def test_segment_deltas_examples():
    assert segment_deltas([(0.9, True), (0.4, False), (0.4, True)]).records() == [
        R(0.9, 1, 0), R(0.4, 1, 1)]
    assert segment_deltas([(0.5, False)] * 3).records() == [R(0.5, 0, 3)]
    assert segment_deltas([]).records() == []


def test_collar_golden_vector(toy):
    clip = toy.clips["collar_example"]
    got = collar_deltas(clip.timeline, clip.events, "A", CollarParams(1.0, 0.2, 1.0)).records()
    assert got == [R(0.7, 0, 1), R(0.6, 1, -1), R(0.5, 0, 0), R(0.4, 0, 0),
                   R(0.3, -1, 1), R(0.2, 0, 0)]


def test_intersection_example(toy):
    clip = toy.clips["intersection_example"]
    got = intersection_deltas(clip.timeline, clip.events, "A",
                              IntersectionParams(0.5, 0.5, 0.3)).records()
    assert [(r.score, r.d_tp, r.d_fp) for r in got] == [
        (0.8, 1, 0), (0.55, 0, 0), (0.4, -1, 1), (0.2, 0, 0), (0.1, 0, 0)]


def test_cross_trigger_sign_sequence(toy):
    clip = toy.clips["cross_trigger_example"]
    got = intersection_deltas(clip.timeline, clip.events, "A",
                              IntersectionParams(0.5, 0.5, 0.5)).records()
    assert got == [R(0.8, 0, 1, (1,)), R(0.7, 0, 0, (0,)), R(0.6, 0, 0, (-1,)),
                   R(0.5, 1, -1, (0,)), R(0.3, -1, 1, (0,)), R(0.1, 0, 0, (0,))]


def test_cross_trigger_lifecycle():
    # one B event; an A detection over it is a cross trigger until it grows
    tl = ScoreTimeline([0.0, 1.0, 2.0, 3.0], [[0.0, 0.0], [0.9, 0.0], [0.0, 0.0]], ("A", "B"))
    got = intersection_deltas(tl, [Event(1.0, 2.0, "B")], "A",
                              IntersectionParams(0.7, 0.7, 0.5)).records()
    assert got == [R(0.9, 0, 1, (1,)), R(0.0, 0, 0, (-1,))]


def test_without_ground_truth_every_detection_is_fp():
    values = [0.2, 0.8, 0.1, 0.8, 0.5]
    tl = ScoreTimeline(np.arange(6.0), np.array(values)[:, None], ("A",))
    d = collar_deltas(tl, [], "A", CollarParams())
    fp = np.cumsum(d.d_fp)
    for score, count in zip(d.scores, fp):
        # just below each distinct score
        assert count == len(detect_events(tl, "A", score - 1e-9))
    assert d.d_tp.tolist() == [0] * len(d)


def test_all_equal_scores_single_record():
    tl = ScoreTimeline(np.arange(5.0), np.full((4, 1), 0.4), ("A",))
    assert collar_deltas(tl, [], "A", CollarParams()).records() == [R(0.4, 0, 1)]


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.sampled_from([0.0, 0.2, 0.4, 0.6, 0.8]), min_size=1, max_size=25))
def test_tree_nodes_are_exactly_the_detections(values):
    ts = np.arange(len(values) + 1.0)
    column = np.array(values)
    tree = detection_tree(ts, column)
    tl = ScoreTimeline(ts, column[:, None], ("A",))
    for k, level in enumerate(tree.levels.tolist()):
        tau = level - 1e-6
        alive = (tree.birth <= k) & ((tree.death > k) | (tree.death >= len(tree.levels)))
        nodes = sorted(zip(tree.onset[alive].tolist(), tree.offset[alive].tolist()))
        assert nodes == [(e.onset, e.offset) for e in detect_events(tl, "A", tau)]


def test_accumulate_examples():
    totals = Totals("A", "collar", n_gp=2, total_duration=20.0)
    a = _deltas([0.9, 0.5], [1, 0], [0, 1])
    b = _deltas([0.5, 0.3], [1, -1], [0, 1])
    curve = accumulate([a, b], totals)
    assert curve.thresholds.tolist() == [0.9, 0.5, 0.3]
    assert curve.n_tp.tolist() == [0, 1, 2, 1]
    assert curve.n_fp.tolist() == [0, 0, 1, 2]
    assert accumulate([a, b], totals) == accumulate([b, a], totals)
    with pytest.raises(errors.NegativeCumulativeCount):
        accumulate([_deltas([0.4], [-1], [0])], totals)


def test_accumulate_empty():
    curve = accumulate([], Totals("A", "collar", n_gp=0, total_duration=1.0))
    assert len(curve.thresholds) == 0 and curve.n_tp.tolist() == [0]


@pytest.mark.parametrize("mode, params", [
    ("collar", CollarParams(0.5, 0.2, 0.5)),
    ("intersection", IntersectionParams(0.5, 0.5, 0.3)),
    ("segment", None),
])
def test_engine_matches_oracle(mode, params):
    rng = np.random.default_rng(11)
    for _ in range(25):
        ds = random_dataset(rng, max_clips=6, max_frames=30)
        curves = statistics_curves(ds, mode, params, segment_length=0.7)
        assert mismatches(ds, curves, mode, params, 0.7) == []


def test_counts_are_monotone_in_segment_mode():
    ds = random_dataset(np.random.default_rng(5))
    for curve in statistics_curves(ds, "segment").values():
        assert np.all(np.diff(curve.n_tp) >= 0) and np.all(np.diff(curve.n_fp) >= 0)
        assert curve.n_tp[-1] <= curve.n_gp


def test_jobs_do_not_change_results():
    ds = random_dataset(np.random.default_rng(9), max_clips=12)
    one = statistics_curves(ds, "intersection", jobs=1)
    many = statistics_curves(ds, "intersection", jobs=3)
    assert one == many


def test_unknown_class_and_mode():
    ds = random_dataset(np.random.default_rng(1), max_clips=2)
    with pytest.raises(errors.UnknownClass):
        statistics_curves(ds, "collar", classes=["zebra"])
    with pytest.raises(ValueError):
        statistics_curves(ds, "frames")
