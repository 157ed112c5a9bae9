"""PR/F1 curves, eFPR-TPR ROC envelopes, PSD-ROC and PSDS."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from exactsed import errors
from exactsed.core import PsdsParams, StatisticsCurve

log = logging.getLogger(__name__)


def representative_thresholds(thresholds: np.ndarray) -> np.ndarray:
    """One threshold inside each row's interval of a statistics curve.

    Row 0 gets the top score itself, inner rows the midpoint of their
    interval, and the last row sits half the smallest score gap below the
    lowest score (gap 1.0 if there is only one score).
    """
    t = np.asarray(thresholds, dtype=float)
    if len(t) == 0:
        return np.zeros(1)
    gaps = -np.diff(t)
    gap = gaps.min() if len(gaps) else 1.0
    return np.concatenate(([t[0]], (t[:-1] + t[1:]) / 2, [t[-1] - gap / 2]))


@dataclass(frozen=True, eq=False)
class PrCurve:
    class_name: str
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray


def pr_f1_curve(curve: StatisticsCurve) -> PrCurve:
    if curve.n_gp <= 0:
        raise errors.NoGroundTruth(f"class {curve.class_name!r} has no ground-truth positives")
    tp = curve.n_tp.astype(float)
    dp = tp + curve.n_fp
    precision = np.divide(tp, dp, out=np.ones_like(tp), where=dp > 0)
    recall = tp / curve.n_gp
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return PrCurve(curve.class_name, representative_thresholds(curve.thresholds),
                   precision, recall, f1)


def best_threshold(curve: PrCurve) -> tuple:
    """``(tau, f1)`` of the best-F1 interval; ties go to the highest threshold."""
    if len(curve.f1) == 0:
        raise errors.EmptyCurve("cannot pick a threshold from an empty curve")
    k = int(np.argmax(curve.f1))
    return float(curve.thresholds[k]), float(curve.f1[k])


def f1_at(curve: StatisticsCurve, tau: float) -> float:
    """Collar/intersection F1 of a fixed threshold."""
    return float(pr_f1_curve(curve).f1[curve.row_for(tau)])


# -- ROC --------------------------------------------------------------------------------

def envelope(x: np.ndarray, y: np.ndarray) -> tuple:
    """Running maximum of ``y`` over points sorted by ``x``.

    Returns the distinct ``x`` values and the best ``y`` reachable at or
    below each of them.
    """
    order = np.lexsort((y, x))
    xs, ys = np.asarray(x, dtype=float)[order], np.maximum.accumulate(np.asarray(y, float)[order])
    last = np.r_[xs[1:] != xs[:-1], True]
    return xs[last], ys[last]


def sample_step(xs: np.ndarray, ys: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Value of the right-continuous step ``(xs, ys)`` at ``at`` (0 before xs[0])."""
    idx = np.searchsorted(xs, at, side="right") - 1
    return np.where(idx >= 0, ys[np.clip(idx, 0, None)], 0.0)


@dataclass(frozen=True, eq=False)
class ClassRoc:
    class_name: str
    efpr: np.ndarray
    tpr: np.ndarray
    envelope_efpr: np.ndarray
    envelope_tpr: np.ndarray

    def at(self, efpr) -> np.ndarray:
        return sample_step(self.envelope_efpr, self.envelope_tpr, np.asarray(efpr, dtype=float))


def efpr_values(curve: StatisticsCurve, params: PsdsParams) -> np.ndarray:
    """Effective false-positive rate per row, in events per ``unit_of_time``."""
    if not curve.total_duration > 0:
        raise ValueError("total duration must be positive")
    unit = params.seconds_per_unit
    efpr = curve.n_fp / (curve.total_duration / unit)
    if params.alpha_ct > 0 and curve.other_classes:
        durations = np.asarray(curve.gt_durations, dtype=float)
        if np.any(durations <= 0):
            empty = [c for c, d in zip(curve.other_classes, durations) if d <= 0]
            raise errors.ZeroCrossDuration(
                f"class {curve.class_name!r}: no ground truth for {empty} to normalise cross triggers"
            )
        ct_rate = curve.n_ct / (durations / unit)
        efpr = efpr + params.alpha_ct * ct_rate.mean(axis=1)
    return efpr


def class_roc(curve: StatisticsCurve, params: PsdsParams) -> ClassRoc:
    if curve.n_gp <= 0:
        raise errors.NoGroundTruth(f"class {curve.class_name!r} has no ground-truth positives")
    efpr = np.concatenate(([0.0], efpr_values(curve, params)))
    tpr = np.concatenate(([0.0], curve.n_tp / curve.n_gp))
    env_x, env_y = envelope(efpr, tpr)
    return ClassRoc(curve.class_name, efpr, tpr, env_x, env_y)


def class_rocs(curves: Mapping[str, StatisticsCurve], params: PsdsParams) -> dict:
    """ROC per class, leaving out (with a warning) classes without ground truth."""
    out = {}
    for name, curve in curves.items():
        if curve.n_gp <= 0:
            log.warning("class %r has no ground truth and is excluded from the PSD-ROC", name)
            continue
        out[name] = class_roc(curve, params)
    return out


# -- PSD-ROC ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PsdRoc:
    efpr: np.ndarray
    class_names: tuple
    class_tpr: np.ndarray  # (n_classes, len(efpr))
    mu: np.ndarray
    sigma: np.ndarray
    etpr: np.ndarray


def psd_roc(rocs: Mapping[str, ClassRoc], params: PsdsParams) -> PsdRoc:
    if not rocs:
        raise errors.NoClasses("no class with ground truth to summarise")
    names = tuple(rocs)
    grid = np.unique(np.concatenate(
        [[0.0, params.efpr_max]] + [rocs[c].envelope_efpr for c in names]
    ))
    tpr = np.stack([rocs[c].at(grid) for c in names])
    mu = tpr.mean(axis=0)
    sigma = tpr.std(axis=0)
    etpr = mu - params.alpha_st * sigma
    if params.clip_negative_etpr:
        etpr = np.maximum(etpr, 0.0)
    return PsdRoc(grid, names, tpr, mu, sigma, etpr)


def auc(points, x_max: float) -> float:
    """Area under a right-continuous step curve from its first x up to ``x_max``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    if np.any(np.diff(x) < 0):
        raise errors.UnsortedInput("x values must be ascending")
    right = np.minimum(np.r_[x[1:], x_max], x_max)
    widths = np.clip(right - x, 0.0, None)
    return float(np.sum(widths * y))


def psds(roc: PsdRoc, params: PsdsParams) -> float:
    """Normalised area under the PSD-ROC on ``[0, efpr_max]``."""
    return auc(np.column_stack([roc.efpr, roc.etpr]), params.efpr_max) / params.efpr_max


def psds_from_curves(curves: Mapping[str, StatisticsCurve], params: PsdsParams) -> tuple:
    """``(psds, PsdRoc)`` from intersection-mode statistics curves."""
    roc = psd_roc(class_rocs(curves, params), params)
    return psds(roc, params), roc


# -- segment mode -------------------------------------------------------------------

def segment_roc(curve: StatisticsCurve) -> tuple:
    """``(fpr, tpr, thresholds)`` of a segment-mode curve; rows run from the
    empty system to everything positive."""
    if curve.n_gp <= 0:
        raise errors.NoGroundTruth(f"class {curve.class_name!r} has no positive segments")
    n_gn = curve.n_gn or 0
    fpr = curve.n_fp / n_gn if n_gn > 0 else np.zeros(len(curve))
    tpr = curve.n_tp / curve.n_gp
    return fpr, tpr, representative_thresholds(curve.thresholds)
