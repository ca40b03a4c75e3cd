"""Plain SGD with a polynomially decaying step size and Polyak-Ruppert averaging.

The iterate is ``x_i = x_{i-1} - eta_i * grad f(x_{i-1}, xi_i)`` with
``eta_i = eta * i**(-alpha)``. The average ``xbar_n`` covers ``x_1..x_n``
and never includes the starting point ``x_0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol, runtime_checkable

import numpy as np

from .exceptions import ConfigError, DimensionError


@runtime_checkable
class GradientOracle(Protocol):
    """Per-sample gradient of a loss ``f(x, sample)``.

    Implementations must be deterministic in ``(x, sample)`` and return a
    vector of length ``dim``.
    """

    dim: int

    def gradient(self, x: np.ndarray, sample: Any) -> np.ndarray: ...


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``eta * i**(-alpha)`` with ``0.5 < alpha < 1``."""

    eta: float = 0.1
    alpha: float = 0.501

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ConfigError(f"eta must be a positive finite number, got {self.eta!r}")
        if not (0.5 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie strictly between 0.5 and 1, got {self.alpha!r}")

    def __call__(self, i: int) -> float:
        return step_size(self, i)


def step_size(schedule: StepSchedule, i: int) -> float:
    """Return ``eta * i**(-alpha)`` for the 1-based step index ``i``."""
    if i < 1:
        raise ValueError(f"step index must be >= 1, got {i}")
    return schedule.eta * float(i) ** (-schedule.alpha)


@dataclass
class SgdState:
    """Current iterate ``x``, running average ``xbar`` and step count ``n``."""

    x: np.ndarray
    xbar: np.ndarray = field(default=None)
    n: int = 0

    def __post_init__(self):
        self.x = np.array(self.x, dtype=np.float64).reshape(-1)
        if self.xbar is None:
            self.xbar = np.zeros_like(self.x)
        else:
            self.xbar = np.array(self.xbar, dtype=np.float64).reshape(-1)
            if self.xbar.shape != self.x.shape:
                raise DimensionError("xbar and x must have the same length")

    @classmethod
    def initial(cls, dim: int, x0=None) -> "SgdState":
        """Fresh state at ``n = 0``; ``x0`` defaults to the zero vector."""
        if x0 is None:
            x0 = np.zeros(dim)
        x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        if x0.shape != (dim,):
            raise DimensionError(f"x0 has length {x0.shape[0]}, expected {dim}")
        return cls(x=x0.copy(), xbar=np.zeros(dim), n=0)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def copy(self) -> "SgdState":
        return SgdState(x=self.x.copy(), xbar=self.xbar.copy(), n=self.n)


def update_mean(xbar: np.ndarray, x_new: np.ndarray, n: int) -> np.ndarray:
    """Fold ``x_new`` into a mean of ``n`` previous values: ``(n*xbar + x_new)/(n+1)``."""
    return (n * np.asarray(xbar, dtype=np.float64) + x_new) / (n + 1)


def sgd_step(state: SgdState, sample, oracle: GradientOracle, schedule: StepSchedule) -> SgdState:
    """Advance one SGD step and update the running average.

    Returns a new state; the input state is left untouched.
    """
    i = state.n + 1
    g = np.asarray(oracle.gradient(state.x, sample), dtype=np.float64).reshape(-1)
    if g.shape != state.x.shape:
        raise DimensionError(f"gradient has length {g.shape[0]}, expected {state.dim}")
    x_new = state.x - step_size(schedule, i) * g
    return SgdState(x=x_new, xbar=update_mean(state.xbar, x_new, state.n), n=i)
