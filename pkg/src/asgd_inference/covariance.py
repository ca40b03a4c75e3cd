"""Online batch-means estimators of the ASGD asymptotic covariance.

For iterates ``x_1..x_n`` with batch sums ``W_i = x_{t_i} + ... + x_i`` the
overlapping estimator is

    Sigma_n = sum_i (W_i - l_i xbar)(W_i - l_i xbar)^T / sum_i l_i

over all ``i <= n``. Expanding the square leaves four running sums
(``V = sum W W^T``, ``P = sum l W``, ``v = sum l``, ``q = sum l^2``), each
updated in O(d^2) per step; the states hold the first two about a moving
centre to avoid cancellation (see ``_BatchState``). The non-overlapping variant sums only over
the last index of every completed batch plus ``n`` itself.

``oracle_overlap`` and ``oracle_nonoverlap`` evaluate the defining sums
directly from stored iterates and exist for testing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .batching import BatchCursor, BatchScheme
from .exceptions import DimensionError, EmptyStateError

# int64 headroom for the compiled path; beyond this the Python path keeps exact ints
_INT_LIMIT = 2**62


@dataclass
class CovarianceEstimate:
    """A symmetric covariance estimate together with its sample count."""

    sigma: np.ndarray
    n: int
    scheme_desc: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def min_eigenvalue_ratio(self) -> float:
        """Smallest eigenvalue divided by ``max(1, largest eigenvalue)``."""
        w = np.linalg.eigvalsh(self.sigma)
        return float(w[0] / max(1.0, w[-1]))


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (dim,):
        raise DimensionError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


def _as_matrix(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and dim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimensionError(f"expected an (n, {dim}) array, got shape {X.shape}")
    return np.ascontiguousarray(X)


def _shift(Mmat, D, q, delta):
    """Co-moments about ``c`` -> co-moments about ``c + delta`` (same operation order as the kernel)."""
    Mmat = Mmat - np.outer(D, delta) - np.outer(delta, D) + float(q) * np.outer(delta, delta)
    return Mmat, D - float(q) * delta


def _estimate(S, n, scheme) -> CovarianceEstimate:
    return CovarianceEstimate(sigma=0.5 * (S + S.T), n=n, scheme_desc=scheme.describe())


class _BatchState:
    """Shared cursor and centred running sums.

    Sums are kept about a centre ``c`` rather than the origin: ``U`` is the
    current batch sum of ``x - c``, ``Mc = sum (W_i - l_i c)(W_i - l_i c)^T``
    and ``Dc = sum l_i (W_i - l_i c)`` over the indices counted so far. At
    every batch boundary ``c`` moves to the running mean of the iterates, an
    exact O(d^2) rewrite of ``Mc`` and ``Dc``. Since the estimate is
    translation invariant this changes nothing mathematically, but it keeps
    the final centring at ``xbar`` free of the cancellation that raw sums
    suffer when the iterates sit far from the origin.
    """

    def __init__(self, dim: int, scheme: BatchScheme):
        if dim < 1:
            raise DimensionError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.scheme = scheme
        self.cursor = BatchCursor(scheme)
        self.U = np.zeros(dim)
        self.c = np.zeros(dim)
        self.total = np.zeros(dim)
        self.Mc = np.zeros((dim, dim))
        self.Dc = np.zeros(dim)
        self._v = 0
        self._q = 0

    @property
    def n(self) -> int:
        return self.cursor.i

    @property
    def W(self) -> np.ndarray:
        """Raw sum of the current batch."""
        return self.U + self.cursor.l * self.c

    def _raw(self):
        """Origin-based ``(sum W W^T, sum l W)`` over the counted indices."""
        P = self.Dc + float(self._q) * self.c
        V = self.Mc + np.outer(P, self.c) + np.outer(self.c, P) - float(self._q) * np.outer(self.c, self.c)
        return V, P

    def _start_batch(self, x_new) -> None:
        self.c = self.total / self.n
        self.Mc, self.Dc = _shift(self.Mc, self.Dc, self._q, self.c - self._c_prev)
        self.U = x_new - self.c

    def _advance(self, x_new) -> bool:
        """Move the cursor and the running total; True when a new batch starts."""
        self.total = self.total + x_new
        self._c_prev = self.c
        return self.cursor.advance()

    def _boundaries(self, n_end: int) -> np.ndarray:
        return np.asarray(self.scheme.boundaries_until(self.cursor.m + 1, n_end), dtype=np.int64)

    def _counters(self) -> np.ndarray:
        c = self.cursor
        return np.array([c.i, c.m, c.t, c.l, self._v, self._q], dtype=np.int64)

    def _fits_int64(self, k: int) -> bool:
        lmax = self.cursor.l + k
        return self._q + k * lmax * lmax < _INT_LIMIT

    def update_many(self, X) -> None:
        """Fold a block of iterates, equivalent to calling ``update`` per row."""
        X = _as_matrix(X, self.dim)
        k = X.shape[0]
        if k == 0:
            return
        if not self._fits_int64(k):
            for row in X:
                self.update(row)
            return
        counters = self._counters()
        self._kernel(X, self.U, self.Mc, self.Dc, self.c, self.total, counters, self._boundaries(self.n + k))
        i, m, t, l, v, q = (int(c) for c in counters)
        self.cursor.sync(i, m, t, l)
        self._v, self._q = v, q

    def _copy_into(self, new):
        new.cursor = self.cursor.copy()
        for name in ("U", "c", "total", "Mc", "Dc"):
            setattr(new, name, getattr(self, name).copy())
        new._v, new._q = self._v, self._q
        return new


class OverlapCovState(_BatchState):
    """Running sums for the overlapping estimator.

    ``W``, ``V``, ``P``, ``v`` and ``q`` expose the current batch sum and
    the four origin-based accumulators after ``n`` steps.
    """

    _kernel = staticmethod(_kernels.overlap_fold)

    @property
    def v(self) -> int:
        return self._v

    @property
    def q(self) -> int:
        return self._q

    @property
    def V(self) -> np.ndarray:
        return self._raw()[0]

    @property
    def P(self) -> np.ndarray:
        return self._raw()[1]

    def update(self, x_new) -> None:
        x_new = _as_vector(x_new, self.dim)
        if self._advance(x_new):
            self._start_batch(x_new)
        else:
            self.U = self.U + (x_new - self.c)
        l = self.cursor.l
        self.Mc = self.Mc + np.outer(self.U, self.U)
        self.Dc = self.Dc + l * self.U
        self._v += l
        self._q += l * l

    def finalize(self, xbar) -> CovarianceEstimate:
        if self.n == 0:
            raise EmptyStateError("no iterates have been folded in yet")
        xbar = _as_vector(xbar, self.dim)
        Mx, _ = _shift(self.Mc, self.Dc, self._q, xbar - self.c)
        return _estimate(Mx / float(self._v), self.n, self.scheme)

    def copy(self) -> "OverlapCovState":
        return self._copy_into(OverlapCovState(self.dim, self.scheme))


class NonOverlapCovState(_BatchState):
    """Running sums for the non-overlapping estimator.

    Completed batches are summarised by ``V_done``, ``P_done``, ``v_done``
    and ``q_done``; the batch in progress is ``W_cur`` with length ``l_cur``.
    """

    _kernel = staticmethod(_kernels.nonoverlap_fold)

    @property
    def v_done(self) -> int:
        return self._v

    @property
    def q_done(self) -> int:
        return self._q

    @property
    def V_done(self) -> np.ndarray:
        return self._raw()[0]

    @property
    def P_done(self) -> np.ndarray:
        return self._raw()[1]

    @property
    def l_cur(self) -> int:
        return self.cursor.l

    @property
    def W_cur(self) -> np.ndarray:
        return self.W

    def update(self, x_new) -> None:
        x_new = _as_vector(x_new, self.dim)
        l_prev = self.cursor.l
        if self._advance(x_new):
            if l_prev > 0:
                self.Mc = self.Mc + np.outer(self.U, self.U)
                self.Dc = self.Dc + l_prev * self.U
                self._v += l_prev
                self._q += l_prev * l_prev
            self._start_batch(x_new)
        else:
            self.U = self.U + (x_new - self.c)

    def _fits_int64(self, k: int) -> bool:
        return self._q + k * (self.cursor.l + k) ** 2 < _INT_LIMIT

    def finalize(self, xbar) -> CovarianceEstimate:
        if self.n == 0:
            raise EmptyStateError("no iterates have been folded in yet")
        xbar = _as_vector(xbar, self.dim)
        if self._v == 0:
            # Before the first boundary the only index is n itself, whose batch
            # sum is n * xbar exactly; return that zero rather than cancellation noise.
            return _estimate(np.zeros((self.dim, self.dim)), self.n, self.scheme)
        delta = xbar - self.c
        Mx, _ = _shift(self.Mc, self.Dc, self._q, delta)
        l = self.cursor.l
        e = self.U - l * delta
        return _estimate((Mx + np.outer(e, e)) / float(self._v + l), self.n, self.scheme)

    def copy(self) -> "NonOverlapCovState":
        return self._copy_into(NonOverlapCovState(self.dim, self.scheme))


ESTIMATORS = {"overlapping": OverlapCovState, "nonoverlapping": NonOverlapCovState}


def make_state(kind: str, dim: int, scheme: BatchScheme):
    try:
        return ESTIMATORS[kind](dim, scheme)
    except KeyError:
        raise ValueError(f"unknown estimator {kind!r}; choose from {sorted(ESTIMATORS)}") from None


def update_overlap(state: OverlapCovState, x_new) -> OverlapCovState:
    state.update(x_new)
    return state


def update_nonoverlap(state: NonOverlapCovState, x_new) -> NonOverlapCovState:
    state.update(x_new)
    return state


def finalize_overlap(state: OverlapCovState, xbar) -> CovarianceEstimate:
    return state.finalize(xbar)


def finalize_nonoverlap(state: NonOverlapCovState, xbar) -> CovarianceEstimate:
    return state.finalize(xbar)


# -- direct-definition oracles ------------------------------------------------


def batch_starts(n: int, scheme: BatchScheme) -> np.ndarray:
    """``t_i`` for ``i = 1..n`` by scanning the boundary sequence."""
    t = np.empty(n, dtype=np.int64)
    k = 1
    a_k, a_next = 1, scheme.boundary(2)
    for i in range(1, n + 1):
        while i >= a_next:
            k += 1
            a_k, a_next = a_next, scheme.boundary(k + 1)
        t[i - 1] = a_k
    return t


def nonoverlap_index_set(n: int, scheme: BatchScheme) -> list[int]:
    """``{n} U {a_k - 1 : k > 1, a_k <= n}`` in increasing order."""
    out = []
    k = 2
    while scheme.boundary(k) <= n:
        out.append(scheme.boundary(k) - 1)
        k += 1
    out.append(n)
    return out


def _oracle(iterates, scheme: BatchScheme, indices) -> CovarianceEstimate:
    X = np.asarray(iterates, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = X.shape[0]
    if n == 0:
        raise EmptyStateError("oracle needs at least one iterate")
    xbar = X.mean(axis=0)
    t = batch_starts(n, scheme)
    csum = np.vstack([np.zeros(X.shape[1]), np.cumsum(X, axis=0)])
    idx = np.asarray(indices, dtype=np.int64)
    lengths = idx - t[idx - 1] + 1
    dev = csum[idx] - csum[t[idx - 1] - 1] - lengths[:, None] * xbar
    S = dev.T @ dev / lengths.sum()
    S = 0.5 * (S + S.T)
    return CovarianceEstimate(sigma=S, n=n, scheme_desc=scheme.describe())


def oracle_overlap(iterates, scheme: BatchScheme) -> CovarianceEstimate:
    """Overlapping estimator evaluated straight from its definition."""
    n = len(iterates)
    return _oracle(iterates, scheme, np.arange(1, n + 1))


def oracle_nonoverlap(iterates, scheme: BatchScheme) -> CovarianceEstimate:
    """Non-overlapping estimator evaluated straight from its definition."""
    n = len(iterates)
    if n == 0:
        raise EmptyStateError("oracle needs at least one iterate")
    return _oracle(iterates, scheme, nonoverlap_index_set(n, scheme))
