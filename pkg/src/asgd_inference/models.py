"""Built-in loss models with known optimum and sandwich covariance.

Both models draw their randomness from a Philox counter-based generator.
Replication ``r`` under master seed ``s`` uses
``SeedSequence(s, spawn_key=(1, r))``, so every replication has its own
stream regardless of the order in which replications are run. The default
true parameter is drawn once per master seed from ``spawn_key=(0,)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .exceptions import ConfigError, DimensionError


class MeanObservation(NamedTuple):
    y: float


class RegressionObservation(NamedTuple):
    a: np.ndarray
    b: float


def replication_rng(master_seed: int, rep_index: int) -> Generator:
    return Generator(Philox(SeedSequence(master_seed, spawn_key=(1, rep_index))))


def truth_rng(master_seed: int) -> Generator:
    return Generator(Philox(SeedSequence(master_seed, spawn_key=(0,))))


def default_x_star(dim: int, master_seed: int) -> np.ndarray:
    """Components drawn uniformly from [0, 1), fixed for a given master seed."""
    return truth_rng(master_seed).uniform(0.0, 1.0, size=dim)


@dataclass(frozen=True)
class MeanEstimationModel:
    """``y = x_star + e`` with Gaussian ``e``; loss ``0.5 * (y - x)**2``."""

    x_star: float = 0.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative")

    dim = 1
    kind = "mean"

    @property
    def optimum(self) -> np.ndarray:
        return np.array([float(self.x_star)])

    def draw(self, rng: Generator) -> MeanObservation:
        return MeanObservation(float(self.x_star + self.noise_sd * rng.standard_normal()))

    def draw_block(self, rng: Generator, size: int):
        """``size`` observations as ``(None, y)``; same stream as repeated :meth:`draw`."""
        y = self.x_star + self.noise_sd * rng.standard_normal(size)
        return None, y

    def gradient(self, x, obs) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape != (1,):
            raise DimensionError(f"mean model is one-dimensional, got x of shape {x.shape}")
        y = obs.y if isinstance(obs, MeanObservation) else float(obs)
        return x - y

    def true_sigma(self) -> np.ndarray:
        return np.array([[self.noise_sd**2]])


@dataclass(frozen=True)
class LinearRegressionModel:
    """``b = a @ x_star + eps`` with ``a ~ N(0, I_d)`` and ``eps ~ N(0, noise_sd**2)``.

    Loss ``0.5 * (a @ x - b)**2``. Here ``A = I`` and ``S = noise_sd**2 I``,
    so the sandwich covariance is ``noise_sd**2 I``.
    """

    x_star: np.ndarray
    noise_sd: float = 1.0

    kind = "linear"

    def __post_init__(self):
        xs = np.array(self.x_star, dtype=np.float64).reshape(-1)
        xs.setflags(write=False)
        object.__setattr__(self, "x_star", xs)
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative")

    @property
    def dim(self) -> int:
        return self.x_star.shape[0]

    @property
    def optimum(self) -> np.ndarray:
        return self.x_star.copy()

    def draw(self, rng: Generator) -> RegressionObservation:
        z = rng.standard_normal(self.dim + 1)
        a = z[: self.dim]
        return RegressionObservation(a, float(a @ self.x_star + self.noise_sd * z[self.dim]))

    def draw_block(self, rng: Generator, size: int):
        """``size`` observations as arrays ``(A, b)``; same stream as repeated :meth:`draw`."""
        Z = rng.standard_normal((size, self.dim + 1))
        A = np.ascontiguousarray(Z[:, : self.dim])
        b = A @ self.x_star + self.noise_sd * Z[:, self.dim]
        return A, b

    def gradient(self, x, obs) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        a = np.asarray(obs.a, dtype=np.float64).reshape(-1)
        if x.shape != (self.dim,) or a.shape != (self.dim,):
            raise DimensionError(
                f"expected vectors of length {self.dim}, got x {x.shape} and a {a.shape}"
            )
        return (a @ x - obs.b) * a

    def true_sigma(self) -> np.ndarray:
        return self.noise_sd**2 * np.eye(self.dim)


def draw(model, rng: Generator):
    return model.draw(rng)


def gradient(model, x, obs) -> np.ndarray:
    return model.gradient(x, obs)


def true_sigma(model) -> np.ndarray:
    return model.true_sigma()


def make_model(kind: str, dim: int = 1, noise_sd: float = 1.0, x_star=None, master_seed: int = 0):
    """Build a model by name, drawing ``x_star`` from the master seed when not given."""
    if kind == "mean":
        if dim != 1:
            raise ConfigError("the mean model is one-dimensional")
        if x_star is None:
            x_star = default_x_star(1, master_seed)[0]
        return MeanEstimationModel(x_star=float(np.asarray(x_star).reshape(-1)[0]), noise_sd=noise_sd)
    if kind == "linear":
        if dim < 1:
            raise ConfigError("dimension must be >= 1")
        if x_star is None:
            x_star = default_x_star(dim, master_seed)
        return LinearRegressionModel(x_star=x_star, noise_sd=noise_sd)
    raise ConfigError(f"unknown model {kind!r}; choose 'mean' or 'linear'")
