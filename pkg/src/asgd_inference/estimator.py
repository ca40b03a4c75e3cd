"""scikit-learn style front end.

``ASGDRegressor`` fits least squares by averaged SGD and reports the
online covariance estimate of the averaged coefficients, so it can be used
inside pipelines, ``clone`` and ``GridSearchCV`` like any other regressor.
``ASGDMeanEstimator`` does the same for a scalar location parameter.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .batching import BatchScheme
from .covariance import ESTIMATORS, CovarianceEstimate
from .exceptions import ConfigError
from .inference import ConfidenceInterval, EllipsoidRegion, ci_coordinate, ci_linear, joint_region
from .sgd import StepSchedule
from .tracker import AsgdTracker

BLOCK = 1 << 16


class _OnlineASGDBase(BaseEstimator):
    def __init__(self, eta=0.1, alpha=0.501, scheme_c=2.0, beta=None,
                 estimator="overlapping", x0=None):
        self.eta = eta
        self.alpha = alpha
        self.scheme_c = scheme_c
        self.beta = beta
        self.estimator = estimator
        self.x0 = x0

    def _make_tracker(self, dim: int) -> AsgdTracker:
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {sorted(ESTIMATORS)}, got {self.estimator!r}")
        schedule = StepSchedule(eta=self.eta, alpha=self.alpha)
        if self.beta is None:
            scheme = BatchScheme(C=self.scheme_c, alpha_hint=self.alpha)
        else:
            scheme = BatchScheme(C=self.scheme_c, beta=self.beta, alpha_hint=self.alpha)
        return AsgdTracker(dim, schedule, scheme, self.estimator, self.x0)

    def _consume(self, A, b, unit_design):
        for start in range(0, b.shape[0], BLOCK):
            stop = start + BLOCK
            self._tracker.step_least_squares(None if unit_design else A[start:stop], b[start:stop], unit_design)
        self._refresh()

    def _refresh(self):
        t = self._tracker
        self.n_samples_seen_ = t.n
        self.last_iterate_ = t.sgd.x.copy()
        self.covariance_ = t.estimate().sigma

    def covariance_estimate(self) -> CovarianceEstimate:
        check_is_fitted(self, "covariance_")
        return self._tracker.estimate()

    def _point(self) -> np.ndarray:
        return self._tracker.xbar

    def confidence_interval(self, w=None, q: float = 0.05, coordinate: int | None = None) -> ConfidenceInterval:
        """``1 - q`` interval for ``w @ x*``, or for one coordinate when ``coordinate`` is given."""
        est = self.covariance_estimate()
        if coordinate is not None:
            return ci_coordinate(self._point(), est, est.n, coordinate, q)
        return ci_linear(self._point(), est, est.n, w, q)

    def joint_region(self, q: float = 0.05) -> EllipsoidRegion:
        est = self.covariance_estimate()
        return joint_region(self._point(), est, est.n, q)


class ASGDRegressor(RegressorMixin, _OnlineASGDBase):
    """Least-squares regression by averaged SGD with online inference.

    Parameters
    ----------
    eta, alpha : float
        Step size ``eta * i**(-alpha)``, ``0.5 < alpha < 1``.
    scheme_c : float
        Scale of the batch boundaries ``floor(scheme_c * k**beta)``.
    beta : float, optional
        Boundary growth exponent; defaults to ``2 / (1 - alpha)``.
    estimator : {"overlapping", "nonoverlapping"}
        Which batch-means covariance estimator to maintain.
    x0 : array-like, optional
        Starting point; zero when omitted.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Averaged SGD iterate.
    covariance_ : ndarray of shape (n_features, n_features)
        Estimated asymptotic covariance of ``sqrt(n) * coef_``.
    last_iterate_ : ndarray of shape (n_features,)
    n_samples_seen_ : int
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self._tracker = self._make_tracker(X.shape[1])
        self.n_features_in_ = X.shape[1]
        self._consume(X, y, unit_design=False)
        return self

    def partial_fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if not hasattr(self, "_tracker"):
            self._tracker = self._make_tracker(X.shape[1])
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        self._consume(X, y, unit_design=False)
        return self

    @property
    def coef_(self) -> np.ndarray:
        check_is_fitted(self, "covariance_")
        return self._tracker.xbar.copy()

    def predict(self, X):
        check_is_fitted(self, "covariance_")
        X = check_array(X, dtype=np.float64)
        return X @ self._tracker.xbar


class ASGDMeanEstimator(_OnlineASGDBase):
    """Averaged SGD estimate of a mean, with its online variance estimate.

    ``fit`` takes a one-dimensional sample ``y`` (or a single-column ``X``).
    ``mean_`` is the averaged iterate and ``covariance_`` the 1x1 estimate
    of the asymptotic variance of ``sqrt(n) * mean_``.
    """

    def _as_sample(self, X):
        X = check_array(np.asarray(X, dtype=np.float64).reshape(-1, 1) if np.ndim(X) == 1 else X,
                        dtype=np.float64)
        if X.shape[1] != 1:
            raise ValueError("ASGDMeanEstimator expects a single column")
        return X[:, 0]

    def fit(self, X, y=None):
        b = self._as_sample(X)
        self._tracker = self._make_tracker(1)
        self.n_features_in_ = 1
        self._consume(None, b, unit_design=True)
        return self

    def partial_fit(self, X, y=None):
        b = self._as_sample(X)
        if not hasattr(self, "_tracker"):
            self._tracker = self._make_tracker(1)
            self.n_features_in_ = 1
        self._consume(None, b, unit_design=True)
        return self

    @property
    def mean_(self) -> float:
        check_is_fitted(self, "covariance_")
        return float(self._tracker.xbar[0])
