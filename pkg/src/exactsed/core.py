"""Domain types, evaluation parameters and dataset validation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from exactsed import errors

# Absolute slack (seconds) for collar comparisons; absorbs decimal round-off.
TIME_EPS = 1e-9
# Relative slack for intersection-ratio comparisons.
RATIO_EPS = 1e-9

UNITS_OF_TIME = {"second": 1.0, "minute": 60.0, "hour": 3600.0}


def within_collar(distance: float, collar: float) -> bool:
    return distance <= collar + TIME_EPS


def meets_ratio(numerator, denominator, rho):
    """``numerator / denominator >= rho`` with a tiny relative slack.

    Works elementwise on arrays. Equality counts as passing.
    """
    return numerator - rho * denominator >= -RATIO_EPS * denominator


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScoreTimeline:
    """Frame-wise class scores of one clip.

    Frame ``i`` spans ``[timestamps[i], timestamps[i + 1])`` and carries the
    score row ``scores[i]``; column ``k`` belongs to ``class_names[k]``.
    """

    timestamps: np.ndarray
    scores: np.ndarray
    class_names: tuple

    def __post_init__(self):
        ts = _readonly(self.timestamps)
        sc = _readonly(self.scores)
        names = tuple(str(c) for c in self.class_names)
        if sc.ndim == 1:
            sc = _readonly(sc.reshape(-1, 1))
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "scores", sc)
        object.__setattr__(self, "class_names", names)

        if not names or any(not c for c in names):
            raise errors.InconsistentClasses("class names must be non-empty")
        if len(set(names)) != len(names):
            raise errors.InconsistentClasses(f"duplicate class names in {names}")
        if sc.ndim != 2 or sc.shape[1] != len(names):
            raise errors.InconsistentClasses(
                f"score matrix shape {sc.shape} does not match {len(names)} classes"
            )
        if ts.ndim != 1 or len(ts) != sc.shape[0] + 1 or sc.shape[0] == 0:
            raise errors.NonMonotoneTimestamps(
                f"need M+1 timestamps for M>=1 frames, got {len(ts)} for {sc.shape[0]}"
            )
        if not np.all(np.isfinite(ts)) or ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise errors.NonMonotoneTimestamps(
                "timestamps must be finite, start at >= 0 and strictly increase"
            )
        if not np.all(np.isfinite(sc)):
            row, col = np.argwhere(~np.isfinite(sc))[0]
            raise errors.NonFiniteScore(
                f"non-finite score {sc[row, col]} at frame {row}, class {names[col]!r}"
            )

    @property
    def n_frames(self) -> int:
        return self.scores.shape[0]

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])

    def class_index(self, class_name: str) -> int:
        try:
            return self.class_names.index(class_name)
        except ValueError:
            raise errors.UnknownClass(f"unknown class {class_name!r}") from None

    def column(self, class_name: str) -> np.ndarray:
        return self.scores[:, self.class_index(class_name)]

    def with_scores(self, scores) -> "ScoreTimeline":
        return ScoreTimeline(self.timestamps, scores, self.class_names)

    def __eq__(self, other):
        if not isinstance(other, ScoreTimeline):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.scores, other.scores)
        )

    __hash__ = None


@dataclass(frozen=True)
class Event:
    onset: float
    offset: float
    label: str

    def __post_init__(self):
        object.__setattr__(self, "onset", float(self.onset))
        object.__setattr__(self, "offset", float(self.offset))
        if not self.label:
            raise errors.UnknownLabel("event label must be non-empty")
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise errors.EventOutOfBounds(f"non-finite event boundary in {self}")
        if self.onset < 0:
            raise errors.NegativeOnset(f"negative onset in {self}")
        if self.offset == self.onset:
            raise errors.ZeroLengthEvent(f"zero-length event {self}")
        if self.offset < self.onset:
            raise errors.OffsetNotAfterOnset(f"offset before onset in {self}")

    @property
    def length(self) -> float:
        return self.offset - self.onset


def as_event(item) -> Event:
    if isinstance(item, Event):
        return item
    onset, offset, label = item
    return Event(onset, offset, label)


@dataclass(frozen=True)
class Clip:
    timeline: ScoreTimeline
    events: tuple
    duration: float


@dataclass(frozen=True)
class Dataset:
    """Validated evaluation set; clips are kept sorted by id."""

    clips: Mapping[str, Clip]

    @property
    def clip_ids(self) -> list:
        return list(self.clips)

    @property
    def class_names(self) -> tuple:
        first = next(iter(self.clips.values()))
        return first.timeline.class_names

    @property
    def total_duration(self) -> float:
        return float(sum(c.duration for c in self.clips.values()))

    def events_of(self, class_name: str) -> list:
        return [e for c in self.clips.values() for e in c.events if e.label == class_name]

    def gt_duration(self, class_name: str) -> float:
        return float(sum(e.length for e in self.events_of(class_name)))

    def as_mappings(self):
        """Inverse of :func:`validate_dataset`."""
        scores = {k: c.timeline for k, c in self.clips.items()}
        gt = {k: list(c.events) for k, c in self.clips.items() if c.events}
        durations = {k: c.duration for k, c in self.clips.items()}
        return scores, gt, durations

    def map_timelines(self, fn) -> "Dataset":
        """New dataset with ``fn`` applied to every timeline."""
        return Dataset(
            {k: Clip(fn(c.timeline), c.events, c.duration) for k, c in self.clips.items()}
        )


def validate_dataset(
    scores: Mapping[str, ScoreTimeline],
    ground_truth: Mapping[str, Iterable],
    durations: Mapping[str, float],
) -> Dataset:
    """Cross-check the three per-clip mappings and build a :class:`Dataset`.

    Clips may be absent from ``ground_truth`` (no events), but every
    ground-truth clip needs scores and every scored clip needs a duration.
    """
    missing = []
    for cid in sorted(set(scores) | set(durations) | set(ground_truth)):
        where = [name for name, m in
                 (("scores", scores), ("durations", durations)) if cid not in m]
        if where:
            missing.append(f"{cid} (no {', no '.join(where)})")
    if missing:
        raise errors.MissingClip("clips missing from some inputs: " + "; ".join(missing))
    if not scores:
        raise errors.MissingClip("dataset has no clips")

    clips = {}
    reference: Optional[Sequence[str]] = None
    ref_id = None
    for cid in sorted(scores):
        timeline = scores[cid]
        if not isinstance(timeline, ScoreTimeline):
            raise TypeError(f"clip {cid}: expected ScoreTimeline, got {type(timeline).__name__}")
        if reference is None:
            reference, ref_id = timeline.class_names, cid
        elif timeline.class_names != reference:
            raise errors.InconsistentClasses(
                f"clip {cid} has classes {list(timeline.class_names)}, "
                f"clip {ref_id} has {list(reference)}"
            )
        duration = float(durations[cid])
        if not (math.isfinite(duration) and duration > 0):
            raise errors.NonPositiveDuration(f"clip {cid}: duration {duration} must be positive")
        if duration < timeline.end:
            raise errors.EventOutOfBounds(
                f"clip {cid}: duration {duration} shorter than last timestamp {timeline.end}"
            )
        events = []
        for item in ground_truth.get(cid, ()):
            try:
                event = as_event(item)
            except errors.ValidationError as exc:
                raise type(exc)(f"clip {cid}: {exc}") from None
            if event.label not in reference:
                raise errors.UnknownLabel(
                    f"clip {cid}: label {event.label!r} not among score classes {list(reference)}"
                )
            if event.offset > duration:
                raise errors.EventOutOfBounds(
                    f"clip {cid}: event ({event.onset}, {event.offset}, {event.label}) "
                    f"ends after clip duration {duration}"
                )
            events.append(event)
        clips[cid] = Clip(timeline, tuple(events), duration)
    return Dataset(clips)


# -- parameters -------------------------------------------------------------------

@dataclass(frozen=True)
class CollarParams:
    onset_collar: float = 0.2
    offset_collar_rate: float = 0.2
    offset_collar_min: Optional[float] = None

    def __post_init__(self):
        if not self.onset_collar > 0:
            raise ValueError(f"onset_collar must be > 0, got {self.onset_collar}")
        if not self.offset_collar_rate >= 0:
            raise ValueError(f"offset_collar_rate must be >= 0, got {self.offset_collar_rate}")
        if self.offset_collar_min is None:
            object.__setattr__(self, "offset_collar_min", self.onset_collar)
        elif self.offset_collar_min < 0:
            raise ValueError("offset_collar_min must be >= 0")

    def offset_collar(self, gt_length):
        """Offset tolerance of a ground-truth event of the given length."""
        return np.maximum(self.offset_collar_min, self.offset_collar_rate * np.asarray(gt_length))


@dataclass(frozen=True)
class IntersectionParams:
    rho_dtc: float = 0.7
    rho_gtc: float = 0.7
    rho_cttc: float = 0.3

    def __post_init__(self):
        for name in ("rho_dtc", "rho_gtc", "rho_cttc"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class PsdsParams:
    alpha_ct: float = 0.0
    alpha_st: float = 1.0
    efpr_max: float = 100.0
    unit_of_time: str = "hour"
    clip_negative_etpr: bool = False

    def __post_init__(self):
        if self.alpha_ct < 0 or self.alpha_st < 0:
            raise ValueError("alpha_ct and alpha_st must be >= 0")
        if not self.efpr_max > 0:
            raise ValueError(f"efpr_max must be > 0, got {self.efpr_max}")
        if self.unit_of_time not in UNITS_OF_TIME:
            raise ValueError(f"unit_of_time must be one of {sorted(UNITS_OF_TIME)}")

    @property
    def seconds_per_unit(self) -> float:
        return UNITS_OF_TIME[self.unit_of_time]


# -- statistics ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StatisticsCurve:
    """Intermediate statistics of one class for every decision threshold.

    ``thresholds`` holds the distinct scores in descending order (length L).
    Row 0 of the count arrays is the empty system (threshold at or above the
    top score); row ``k`` holds the counts for any threshold ``tau`` with
    ``thresholds[k] <= tau < thresholds[k-1]`` (``thresholds[L] = -inf``),
    frames being positive iff ``score > tau``.
    """

    class_name: str
    mode: str
    thresholds: np.ndarray
    n_tp: np.ndarray
    n_fp: np.ndarray
    n_gp: int
    total_duration: float
    other_classes: tuple = ()
    n_ct: Optional[np.ndarray] = None
    gt_durations: tuple = ()
    n_gn: Optional[int] = None

    def __post_init__(self):
        L = len(self.thresholds)
        for name in ("n_tp", "n_fp"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (L + 1,):
                raise ValueError(f"{name} must have length {L + 1}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        ct = self.n_ct
        if ct is None:
            ct = np.zeros((L + 1, len(self.other_classes)), dtype=np.int64)
        ct = np.asarray(ct, dtype=np.int64).reshape(L + 1, len(self.other_classes))
        object.__setattr__(self, "n_ct", ct)
        object.__setattr__(self, "thresholds", np.asarray(self.thresholds, dtype=float))
        object.__setattr__(self, "other_classes", tuple(self.other_classes))
        object.__setattr__(self, "gt_durations", tuple(float(x) for x in self.gt_durations))

    def __len__(self):
        return len(self.n_tp)

    def __eq__(self, other):
        if not isinstance(other, StatisticsCurve):
            return NotImplemented
        return (
            (self.class_name, self.mode, self.n_gp, self.total_duration, self.other_classes,
             self.gt_durations, self.n_gn)
            == (other.class_name, other.mode, other.n_gp, other.total_duration,
                other.other_classes, other.gt_durations, other.n_gn)
            and all(np.array_equal(getattr(self, f), getattr(other, f))
                    for f in ("thresholds", "n_tp", "n_fp", "n_ct"))
        )

    __hash__ = None

    def row_for(self, tau: float) -> int:
        """Row index holding the statistics at threshold ``tau``."""
        # number of distinct scores strictly above tau
        return int(np.searchsorted(-self.thresholds, -tau, side="left"))

    def at(self, tau: float) -> tuple:
        k = self.row_for(tau)
        return int(self.n_tp[k]), int(self.n_fp[k]), tuple(int(x) for x in self.n_ct[k])


def derived_counts(curve: StatisticsCurve, k: int) -> tuple:
    """``(N_DP, N_FN)`` at row ``k``: detections and missed ground truths."""
    if not 0 <= k < len(curve):
        raise errors.IndexOutOfRange(f"row {k} outside [0, {len(curve) - 1}]")
    tp = int(curve.n_tp[k])
    return tp + int(curve.n_fp[k]), curve.n_gp - tp
