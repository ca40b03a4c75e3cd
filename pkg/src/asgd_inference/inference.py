"""Confidence intervals and regions built from ``(xbar_n, Sigma_n, n)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .covariance import CovarianceEstimate
from .exceptions import DimensionError, InvalidEstimateError

NEGATIVE_VARIANCE_TOL = 1e-10
MAX_CONDITION = 1e12

# Acklam's rational approximation to the normal quantile (relative error < 1.15e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _acklam_lower(p: float) -> float:
    # valid for 0 < p <= 0.5
    if p < _P_LOW:
        r = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
        den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        return num / den
    u = p - 0.5
    r = u * u
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def z_quantile(p: float) -> float:
    """Inverse of the standard normal CDF.

    A rational initial guess is polished with two Halley steps on the CDF.
    The upper half is obtained by symmetry, which keeps ``1 - p`` exact.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if p > 0.5:
        return -z_quantile(1.0 - p)
    if p == 0.5:
        return 0.0
    x = _acklam_lower(p)
    for _ in range(2):
        e = norm_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def chi2_cdf(x: float, d: int) -> float:
    return float(special.gammainc(0.5 * d, 0.5 * x)) if x > 0 else 0.0


def chi2_quantile(d: int, p: float) -> float:
    """Inverse CDF of the chi-square law with ``d`` degrees of freedom.

    Solves ``P(d/2, x/2) = p`` (or ``Q(d/2, x/2) = 1 - p`` in the upper
    half, to keep tail precision) by Brent's method on a bracket grown
    around the Wilson-Hilferty approximation.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {d!r}")
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    k = 0.5 * d
    if p <= 0.5:
        f = lambda x: special.gammainc(k, 0.5 * x) - p
    else:
        pc = 1.0 - p
        f = lambda x: pc - special.gammaincc(k, 0.5 * x)

    h = 2.0 / (9.0 * d)
    guess = d * (1.0 - h + z_quantile(p) * math.sqrt(h)) ** 3
    if not guess > 0:
        guess = d * 1e-3
    lo, hi = guess, guess
    while f(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            break
    while f(hi) < 0:
        hi *= 2.0
    if lo == hi:
        return lo
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _checked_variance(value: float) -> float:
    if value < -NEGATIVE_VARIANCE_TOL:
        raise InvalidEstimateError(f"estimated variance {value!r} is negative")
    return max(value, 0.0)


def _sigma_of(est) -> np.ndarray:
    return est.sigma if isinstance(est, CovarianceEstimate) else np.asarray(est, dtype=np.float64)


def _n_of(est, n):
    if n is not None:
        return int(n)
    if isinstance(est, CovarianceEstimate):
        return est.n
    raise ValueError("n is required when est is a bare matrix")


def ci_linear(xbar, est, n: int | None = None, w=None, q: float = 0.05) -> ConfidenceInterval:
    """Interval ``w @ xbar +/- z_{1-q/2} * sqrt(w @ Sigma @ w / n)`` for ``w @ x*``."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    sigma = _sigma_of(est)
    n = _n_of(est, n)
    if n < 1:
        raise ValueError("n must be >= 1")
    xbar = np.asarray(xbar, dtype=np.float64).reshape(-1)
    d = xbar.shape[0]
    if sigma.shape != (d, d):
        raise DimensionError(f"covariance has shape {sigma.shape}, expected ({d}, {d})")
    w = np.ones(d) if w is None else np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (d,):
        raise DimensionError(f"w has length {w.shape[0]}, expected {d}")
    if not np.any(w):
        raise ValueError("w must be nonzero")
    var = _checked_variance(float(w @ sigma @ w))
    center = float(w @ xbar)
    half = z_quantile(1.0 - q / 2.0) * math.sqrt(var / n)
    return ConfidenceInterval(center - half, center + half, 1.0 - q)


def ci_coordinate(xbar, est, n: int | None = None, i: int = 0, q: float = 0.05) -> ConfidenceInterval:
    """Interval for coordinate ``i`` (0-based) of ``x*``."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    sigma = _sigma_of(est)
    n = _n_of(est, n)
    xbar = np.asarray(xbar, dtype=np.float64).reshape(-1)
    if not 0 <= i < xbar.shape[0]:
        raise IndexError(f"coordinate {i} out of range for dimension {xbar.shape[0]}")
    var = _checked_variance(float(sigma[i, i]))
    half = z_quantile(1.0 - q / 2.0) * math.sqrt(var / n)
    center = float(xbar[i])
    return ConfidenceInterval(center - half, center + half, 1.0 - q)


@dataclass(frozen=True)
class EllipsoidRegion:
    """``{x : (x - center)^T shape^{-1} (x - center) <= radius_sq}``."""

    center: np.ndarray
    shape: np.ndarray
    radius_sq: float
    level: float
    _chol: np.ndarray

    def distance_sq(self, x) -> float:
        diff = np.asarray(x, dtype=np.float64).reshape(-1) - self.center
        if diff.shape != self.center.shape:
            raise DimensionError("point has the wrong dimension")
        y = np.linalg.solve(self._chol, diff)
        return float(y @ y)

    def contains(self, x) -> bool:
        return self.distance_sq(x) <= self.radius_sq


def joint_region(xbar, est, n: int | None = None, q: float = 0.05) -> EllipsoidRegion:
    """Joint ``1 - q`` confidence ellipsoid ``n (xbar - x)^T Sigma^{-1} (xbar - x) <= chi2_{d, 1-q}``."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    sigma = _sigma_of(est)
    n = _n_of(est, n)
    xbar = np.asarray(xbar, dtype=np.float64).reshape(-1)
    d = xbar.shape[0]
    if sigma.shape != (d, d):
        raise DimensionError(f"covariance has shape {sigma.shape}, expected ({d}, {d})")
    eig = np.linalg.eigvalsh(sigma)
    if not eig[0] > 0 or eig[-1] / eig[0] > MAX_CONDITION:
        raise InvalidEstimateError(
            f"covariance estimate is singular or indefinite (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})"
        )
    shape = sigma / n
    try:
        chol = np.linalg.cholesky(shape)
    except np.linalg.LinAlgError as exc:
        raise InvalidEstimateError("covariance estimate is not positive definite") from exc
    return EllipsoidRegion(
        center=xbar.copy(), shape=shape, radius_sq=chi2_quantile(d, 1.0 - q), level=1.0 - q, _chol=chol
    )
