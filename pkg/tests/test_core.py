import numpy as np
import pytest

from exactsed import errors
from exactsed.core import (
    CollarParams,
    Event,
    IntersectionParams,
    PsdsParams,
    ScoreTimeline,
    StatisticsCurve,
    derived_counts,
    meets_ratio,
    validate_dataset,
)


def timeline(scores, classes=("dog",), step=1.0):
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    return ScoreTimeline(np.arange(n + 1) * step, scores, classes)


def test_validate_single_clip():
    ds = validate_dataset({"a": timeline([0.2, 0.7])}, {"a": [(0.5, 1.5, "dog")]}, {"a": 2.0})
    assert ds.clip_ids == ["a"]
    assert ds.clips["a"].events == (Event(0.5, 1.5, "dog"),)
    assert ds.total_duration == 2.0


def test_unknown_label():
    with pytest.raises(errors.UnknownLabel):
        validate_dataset({"a": timeline([0.2])}, {"a": [(0.0, 1.0, "cat")]}, {"a": 1.0})


def test_event_out_of_bounds():
    with pytest.raises(errors.EventOutOfBounds, match="clip a"):
        validate_dataset({"a": timeline([0.1] * 10)}, {"a": [(3.0, 12.0, "dog")]}, {"a": 10.0})


def test_missing_clip_reports_every_id():
    with pytest.raises(errors.MissingClip) as info:
        validate_dataset({"a": timeline([0.1])}, {"b": [(0, 1, "dog")]}, {"a": 1.0, "c": 1.0})
    assert "b" in str(info.value) and "c" in str(info.value)


def test_scores_without_ground_truth_are_fine():
    ds = validate_dataset({"a": timeline([0.1]), "b": timeline([0.3])}, {}, {"a": 1.0, "b": 1.0})
    assert [c.events for c in ds.clips.values()] == [(), ()]


def test_inconsistent_classes():
    with pytest.raises(errors.InconsistentClasses):
        validate_dataset(
            {"a": timeline([0.1]), "b": timeline([0.1], classes=("cat",))},
            {}, {"a": 1.0, "b": 1.0},
        )


def test_duration_shorter_than_scores():
    with pytest.raises(errors.EventOutOfBounds):
        validate_dataset({"a": timeline([0.1, 0.2])}, {}, {"a": 1.5})


@pytest.mark.parametrize("event, exc", [
    ((1.0, 1.0, "dog"), errors.ZeroLengthEvent),
    ((2.0, 1.0, "dog"), errors.OffsetNotAfterOnset),
    ((-1.0, 1.0, "dog"), errors.NegativeOnset),
])
def test_bad_events(event, exc):
    with pytest.raises(exc):
        validate_dataset({"a": timeline([0.1, 0.1, 0.1])}, {"a": [event]}, {"a": 3.0})


def test_validation_is_idempotent():
    ds = validate_dataset(
        {"x": timeline([[0.1, 0.9], [0.4, 0.2]], ("a", "b")),
         "y": timeline([[0.3, 0.3]], ("a", "b"))},
        {"x": [(0, 1, "a"), (0.5, 2, "b")]},
        {"x": 2.0, "y": 4.0},
    )
    again = validate_dataset(*ds.as_mappings())
    assert again == ds


def test_timeline_invariants():
    with pytest.raises(errors.NonMonotoneTimestamps):
        ScoreTimeline([0.0, 1.0, 1.0], [[0.1], [0.2]], ("a",))
    with pytest.raises(errors.NonFiniteScore):
        ScoreTimeline([0.0, 1.0], [[np.nan]], ("a",))
    with pytest.raises(errors.InconsistentClasses):
        ScoreTimeline([0.0, 1.0], [[0.1, 0.2]], ("a", "a"))
    tl = timeline([0.5])
    with pytest.raises(ValueError):
        tl.scores[0, 0] = 1.0  # read-only
    with pytest.raises(errors.UnknownClass):
        tl.column("cat")


def _curve(n_tp, n_fp, n_gp):
    thresholds = np.linspace(0.9, 0.1, len(n_tp) - 1)
    return StatisticsCurve("a", "collar", thresholds, n_tp, n_fp, n_gp, 10.0)


@pytest.mark.parametrize("tp, fp, gp, expected", [
    (1, 2, 3, (3, 2)),
    (0, 0, 5, (0, 5)),
    (4, 0, 4, (4, 0)),
])
def test_derived_counts(tp, fp, gp, expected):
    curve = _curve([0, tp], [0, fp], gp)
    assert derived_counts(curve, 1) == expected


def test_derived_counts_range():
    curve = _curve([0, 1], [0, 0], 1)
    with pytest.raises(errors.IndexOutOfRange):
        derived_counts(curve, 2)


def test_row_lookup_uses_strict_rule():
    curve = StatisticsCurve("a", "collar", [0.7, 0.6, 0.3], [0, 0, 1, 0], [0, 1, 0, 1], 1, 10.0)
    assert curve.row_for(0.7) == 0      # nothing scores above 0.7
    assert curve.row_for(0.69) == 1
    assert curve.row_for(0.6) == 1
    assert curve.row_for(0.3) == 2
    assert curve.row_for(-5) == 3


def test_params_defaults_and_checks():
    c = CollarParams()
    assert (c.onset_collar, c.offset_collar_rate, c.offset_collar_min) == (0.2, 0.2, 0.2)
    assert c.offset_collar(5.0) == pytest.approx(1.0)
    assert c.offset_collar(0.5) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        CollarParams(0.0)
    with pytest.raises(ValueError):
        IntersectionParams(0.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        IntersectionParams(0.5, 1.1, 0.5)
    with pytest.raises(ValueError):
        PsdsParams(efpr_max=0)
    assert PsdsParams().seconds_per_unit == 3600.0


def test_meets_ratio_counts_equality():
    assert meets_ratio(1.0, 2.0, 0.5)
    assert meets_ratio(0.1 + 0.2, 0.6, 0.5)  # 0.30000000000000004 / 0.6
    assert not meets_ratio(0.99, 2.0, 0.5)
