"""Adapted Wasserstein estimation from dependent observations."""

from .adapted_ot import aw_distance, estimate_aw, smoothed_adapted_estimator, wasserstein_paths
from .errors import AwestError, PreconditionError, StateSpaceTooLarge, UnsupportedPrefixError, ValidationError
from .ot_core import DiscreteMeasure, wasserstein1
from .path_measure import DiscretePathMeasure, PathSample, adapted_empirical_measure, empirical_measure

__all__ = [
    "AwestError",
    "DiscreteMeasure",
    "DiscretePathMeasure",
    "PathSample",
    "PreconditionError",
    "StateSpaceTooLarge",
    "UnsupportedPrefixError",
    "ValidationError",
    "adapted_empirical_measure",
    "aw_distance",
    "empirical_measure",
    "estimate_aw",
    "smoothed_adapted_estimator",
    "wasserstein1",
    "wasserstein_paths",
]
