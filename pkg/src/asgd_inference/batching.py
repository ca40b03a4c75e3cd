"""Motivating-batch boundaries ``a_1 = 1, a_k = floor(C * k**beta)``.

Step ``i`` belongs to batch ``m`` when ``a_m <= i < a_{m+1}``. The batch
starts at ``t_i = a_m`` and the overlapping window ending at ``i`` has
length ``l_i = i - t_i + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .exceptions import ConfigError


@dataclass(frozen=True)
class BatchScheme:
    """Polynomial batch boundaries.

    Parameters
    ----------
    C : float
        Scale constant, ``C > 0``.
    beta : float, optional
        Growth exponent, ``beta > 1``. When omitted it is derived from
        ``alpha_hint`` as ``2 / (1 - alpha_hint)``.
    alpha_hint : float, optional
        Step-size decay exponent used to pick the default ``beta``.
    """

    C: float = 2.0
    beta: float | None = None
    alpha_hint: float | None = None

    def __post_init__(self):
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ConfigError(f"C must be a positive finite number, got {self.C!r}")
        beta = self.beta
        if beta is None:
            if self.alpha_hint is None:
                raise ConfigError("either beta or alpha_hint must be given")
            if not (0.5 < self.alpha_hint < 1.0):
                raise ConfigError(f"alpha_hint must lie in (0.5, 1), got {self.alpha_hint!r}")
            beta = 2.0 / (1.0 - self.alpha_hint)
            object.__setattr__(self, "beta", beta)
        if not (beta > 1 and math.isfinite(beta)):
            raise ConfigError(f"beta must be finite and > 1, got {beta!r}")
        if self.boundary(2) < 2:
            raise ConfigError(
                f"floor(C * 2**beta) = {self.boundary(2)} < 2; boundaries would not be strictly increasing"
            )

    @classmethod
    def for_alpha(cls, alpha: float, C: float = 2.0) -> "BatchScheme":
        return cls(C=C, alpha_hint=alpha)

    def boundary(self, k: int) -> int:
        """Return ``a_k``."""
        if k < 1:
            raise ValueError(f"batch index must be >= 1, got {k}")
        if k == 1:
            return 1
        return math.floor(self.C * float(k) ** self.beta)

    def batch_count(self, n: int) -> int:
        """Number of batches ``M`` with ``a_M <= n < a_{M+1}``."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        m = 1
        while self.boundary(m + 1) <= n:
            m += 1
        return m

    def boundaries_until(self, first_k: int, n_end: int) -> list[int]:
        """``a_{first_k}, a_{first_k+1}, ...`` up to and including the first value above ``n_end``."""
        out = []
        k = first_k
        while True:
            a = self.boundary(k)
            out.append(a)
            if a > n_end:
                return out
            k += 1

    def describe(self) -> dict:
        return {"C": self.C, "beta": self.beta, "alpha": self.alpha_hint}


def boundary(scheme: BatchScheme, k: int) -> int:
    return scheme.boundary(k)


def batch_count(scheme: BatchScheme, n: int) -> int:
    return scheme.batch_count(n)


@dataclass
class BatchCursor:
    """Position of step ``i`` within the batch structure.

    A fresh cursor sits before step 1 (``i = 0``, ``m = 0``); the first call
    to :meth:`advance` enters batch 1.
    """

    scheme: BatchScheme
    i: int = 0
    m: int = 0
    t: int = 0
    l: int = 0
    next_boundary: int = field(default=1)

    def advance(self) -> bool:
        """Move to step ``i + 1``. Returns True if a new batch starts there."""
        self.i += 1
        if self.i == self.next_boundary:
            self.m += 1
            self.t = self.i
            self.l = 1
            self.next_boundary = self.scheme.boundary(self.m + 1)
            return True
        self.l += 1
        return False

    def sync(self, i: int, m: int, t: int, l: int) -> None:
        """Set the position directly (used after a bulk update)."""
        self.i, self.m, self.t, self.l = i, m, t, l
        self.next_boundary = self.scheme.boundary(self.m + 1)

    def copy(self) -> "BatchCursor":
        return BatchCursor(self.scheme, self.i, self.m, self.t, self.l, self.next_boundary)


def advance(cursor: BatchCursor, scheme: BatchScheme | None = None) -> BatchCursor:
    """Advance ``cursor`` by one step in place and return it."""
    if scheme is not None and scheme != cursor.scheme:
        raise ValueError("cursor was built for a different scheme")
    cursor.advance()
    return cursor
