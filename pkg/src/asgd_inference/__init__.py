"""Averaged SGD with fully online batch-means covariance estimation.

The package keeps the Polyak-Ruppert average of SGD iterates together with
an O(d^2)-per-step estimate of its asymptotic covariance, so confidence
intervals and regions are available at any point of a stream whose length
is not known in advance.
"""
__version__ = "0.1.0"

from .batching import BatchCursor, BatchScheme, advance, batch_count, boundary
from .covariance import (
    CovarianceEstimate,
    NonOverlapCovState,
    OverlapCovState,
    finalize_nonoverlap,
    finalize_overlap,
    oracle_nonoverlap,
    oracle_overlap,
    update_nonoverlap,
    update_overlap,
)
from .estimator import ASGDMeanEstimator, ASGDRegressor
from .exceptions import ConfigError, DataError, DimensionError, EmptyStateError, InvalidEstimateError
from .inference import (
    ConfidenceInterval,
    EllipsoidRegion,
    chi2_quantile,
    ci_coordinate,
    ci_linear,
    joint_region,
    z_quantile,
)
from .models import LinearRegressionModel, MeanEstimationModel
from .sgd import GradientOracle, SgdState, StepSchedule, sgd_step, step_size, update_mean
from .tracker import AsgdTracker
