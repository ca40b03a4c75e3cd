"""Compiled inner loops.

Each kernel mirrors a per-step Python update exactly (same operation
order) and mutates the passed arrays in place. Integer bookkeeping travels
in an int64 ``counters`` array so the caller can resync its Python state.

Both covariance kernels keep their sums around a centre ``c`` that moves
to the running mean of the iterates at every batch boundary (see
``covariance.py``); ``total`` is the raw sum of all iterates seen.
"""
import numba
import numpy as np

# counters layout shared by both covariance kernels
I, M, T, L, V, Q = 0, 1, 2, 3, 4, 5


@numba.njit(cache=True)
def recenter(Mmat, D, c, total, i, q):
    """Move the centre to ``total / i``, rewriting ``Mmat`` and ``D`` to match."""
    d = c.shape[0]
    delta = np.empty(d)
    for j in range(d):
        new = total[j] / i
        delta[j] = new - c[j]
        c[j] = new
    for j in range(d):
        for k in range(d):
            Mmat[j, k] = ((Mmat[j, k] - D[j] * delta[k]) - delta[j] * D[k]) + q * (delta[j] * delta[k])
    for j in range(d):
        D[j] = D[j] - q * delta[j]


@numba.njit(cache=True)
def overlap_fold(X, U, Mmat, D, c, total, counters, boundaries):
    i = counters[I]
    m = counters[M]
    t = counters[T]
    l = counters[L]
    v = counters[V]
    q = counters[Q]
    d = X.shape[1]
    bi = 0
    for r in range(X.shape[0]):
        i += 1
        for j in range(d):
            total[j] += X[r, j]
        if i == boundaries[bi]:
            m += 1
            t = i
            l = 1
            bi += 1
            recenter(Mmat, D, c, total, i, q)
            for j in range(d):
                U[j] = X[r, j] - c[j]
        else:
            l += 1
            for j in range(d):
                U[j] += X[r, j] - c[j]
        for j in range(d):
            for k in range(d):
                Mmat[j, k] += U[j] * U[k]
        for j in range(d):
            D[j] += l * U[j]
        v += l
        q += l * l
    counters[I] = i
    counters[M] = m
    counters[T] = t
    counters[L] = l
    counters[V] = v
    counters[Q] = q


@numba.njit(cache=True)
def nonoverlap_fold(X, U, Mmat, D, c, total, counters, boundaries):
    i = counters[I]
    m = counters[M]
    t = counters[T]
    l = counters[L]
    v = counters[V]
    q = counters[Q]
    d = X.shape[1]
    bi = 0
    for r in range(X.shape[0]):
        i += 1
        for j in range(d):
            total[j] += X[r, j]
        if i == boundaries[bi]:
            if l > 0:
                for j in range(d):
                    for k in range(d):
                        Mmat[j, k] += U[j] * U[k]
                for j in range(d):
                    D[j] += l * U[j]
                v += l
                q += l * l
            m += 1
            t = i
            l = 1
            bi += 1
            recenter(Mmat, D, c, total, i, q)
            for j in range(d):
                U[j] = X[r, j] - c[j]
        else:
            l += 1
            for j in range(d):
                U[j] += X[r, j] - c[j]
    counters[I] = i
    counters[M] = m
    counters[T] = t
    counters[L] = l
    counters[V] = v
    counters[Q] = q


@numba.njit(cache=True)
def sgd_least_squares(A, b, x, xbar, n0, eta, alpha, unit_design, out):
    """SGD on ``0.5 * (a @ x - b)**2``; writes each new iterate to ``out``.

    With ``unit_design`` the covariate is the constant 1 and ``A`` is ignored,
    which gives the mean-estimation gradient ``x - b``.
    """
    d = x.shape[0]
    n = n0
    for r in range(b.shape[0]):
        i = n + 1
        step = eta * float(i) ** (-alpha)
        if unit_design:
            resid = x[0] - b[r]
            x[0] = x[0] - step * resid
        else:
            resid = 0.0
            for j in range(d):
                resid += A[r, j] * x[j]
            resid -= b[r]
            for j in range(d):
                x[j] = x[j] - step * (resid * A[r, j])
        for j in range(d):
            xbar[j] = (n * xbar[j] + x[j]) / (n + 1)
            out[r, j] = x[j]
        n = i
    return n
