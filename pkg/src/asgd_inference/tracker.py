"""SGD iterate, running average and covariance accumulators kept in step."""
from __future__ import annotations

import numpy as np

from . import _kernels
from .batching import BatchScheme
from .covariance import CovarianceEstimate, make_state
from .exceptions import DimensionError
from .sgd import GradientOracle, SgdState, StepSchedule, sgd_step


class AsgdTracker:
    """Streams observations through SGD and one batch-means estimator.

    Memory is O(d^2) whatever the stream length. ``step`` handles a single
    observation with any :class:`GradientOracle`; ``step_least_squares``
    processes a block of least-squares observations through the compiled
    path and gives the same result.
    """

    def __init__(self, dim: int, schedule: StepSchedule, scheme: BatchScheme,
                 estimator: str = "overlapping", x0=None):
        self.schedule = schedule
        self.scheme = scheme
        self.estimator = estimator
        self.sgd = SgdState.initial(dim, x0)
        self.cov = make_state(estimator, dim, scheme)

    @property
    def dim(self) -> int:
        return self.sgd.dim

    @property
    def n(self) -> int:
        return self.sgd.n

    @property
    def xbar(self) -> np.ndarray:
        return self.sgd.xbar

    def step(self, sample, oracle: GradientOracle) -> None:
        self.sgd = sgd_step(self.sgd, sample, oracle, self.schedule)
        self.cov.update(self.sgd.x)

    def step_least_squares(self, A, b, unit_design: bool = False) -> np.ndarray:
        """Run SGD on ``0.5 * (a @ x - b)**2`` over a block and return the new iterates.

        ``unit_design=True`` takes every covariate to be 1 (mean estimation)
        and ignores ``A``.
        """
        b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
        k = b.shape[0]
        if unit_design:
            if self.dim != 1:
                raise DimensionError("unit design requires a one-dimensional parameter")
            A = np.empty((0, 1))
        else:
            A = np.ascontiguousarray(A, dtype=np.float64)
            if A.shape != (k, self.dim):
                raise DimensionError(f"covariates have shape {A.shape}, expected ({k}, {self.dim})")
        out = np.empty((k, self.dim))
        x, xbar = self.sgd.x.copy(), self.sgd.xbar.copy()
        n = _kernels.sgd_least_squares(
            A, b, x, xbar, self.sgd.n, self.schedule.eta, self.schedule.alpha, unit_design, out
        )
        self.sgd = SgdState(x=x, xbar=xbar, n=int(n))
        self.cov.update_many(out)
        return out

    def estimate(self) -> CovarianceEstimate:
        return self.cov.finalize(self.sgd.xbar)
