"""Exact threshold-independent evaluation of sound event detection systems."""

from exactsed.core import (
    CollarParams,
    Dataset,
    Event,
    IntersectionParams,
    PsdsParams,
    ScoreTimeline,
    StatisticsCurve,
    derived_counts,
    validate_dataset,
)
from exactsed.engine import statistics_curves
from exactsed.io import load_dataset
from exactsed.metrics import psds_from_curves

__version__ = "0.1.0"

__all__ = [
    "CollarParams",
    "Dataset",
    "Event",
    "IntersectionParams",
    "PsdsParams",
    "ScoreTimeline",
    "StatisticsCurve",
    "derived_counts",
    "load_dataset",
    "psds_from_curves",
    "statistics_curves",
    "validate_dataset",
]
