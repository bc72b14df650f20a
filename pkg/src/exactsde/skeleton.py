"""Path skeletons and observation sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bridge import impute
from .errors import InvalidArgument


@dataclass
class Skeleton:
    """Finite sufficient statistic of an exact diffusion draw on ``[0, T]``.

    ``psi`` are the Poisson times with values ``x_psi``; ``obs_times`` always
    start at 0 and end at ``T`` and carry values ``x_obs``.  The two time sets
    are disjoint.  Values anywhere else follow from Brownian bridges.
    """

    T: float
    psi: np.ndarray
    x_psi: np.ndarray
    obs_times: np.ndarray
    x_obs: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.x_psi = np.asarray(self.x_psi, dtype=float)
        self.obs_times = np.asarray(self.obs_times, dtype=float)
        self.x_obs = np.asarray(self.x_obs, dtype=float)

    def validate(self):
        if self.psi.shape != self.x_psi.shape or self.obs_times.shape != self.x_obs.shape:
            raise InvalidArgument("skeleton times and values are misaligned")
        if self.obs_times.size < 2 or self.obs_times[0] != 0 or self.obs_times[-1] != self.T:
            raise InvalidArgument("observation times must start at 0 and end at T")
        if np.any(np.diff(self.obs_times) <= 0) or np.any(np.diff(self.psi) <= 0):
            raise InvalidArgument("skeleton times must be strictly increasing")
        if self.psi.size and (self.psi[0] <= 0 or self.psi[-1] >= self.T):
            raise InvalidArgument("Poisson times must lie inside (0, T)")
        if np.intersect1d(self.psi, self.obs_times).size:
            raise InvalidArgument("Poisson and observation times overlap")
        return self

    @property
    def x0(self) -> float:
        return float(self.x_obs[0])

    @property
    def xT(self) -> float:
        return float(self.x_obs[-1])

    def merged(self):
        """All skeleton times in order, their values, and a mask of Poisson times.

        The result is cached; skeleton arrays are never modified in place.
        """
        cached = self.__dict__.get("_merged")
        if cached is not None:
            return cached
        times = np.concatenate((self.obs_times, self.psi))
        order = np.argsort(times, kind="stable")
        values = np.concatenate((self.x_obs, self.x_psi))[order]
        is_psi = order >= self.obs_times.size
        self.__dict__["_merged"] = out = (times[order], values, is_psi)
        return out

    @classmethod
    def from_merged(cls, T, times, values, is_psi) -> Skeleton:
        out = cls(T, times[is_psi], values[is_psi], times[~is_psi], values[~is_psi])
        out.__dict__["_merged"] = (times, values, is_psi)
        return out

    def values_at(self, times, rng) -> np.ndarray:
        """Impute the path at arbitrary sorted times in ``[0, T]`` from bridges."""
        times = np.asarray(times, dtype=float)
        kt, kx, _ = self.merged()
        return impute(kt, kx, times, rng.gen.standard_normal(times.size))

    def copy(self) -> Skeleton:
        return Skeleton(self.T, self.psi.copy(), self.x_psi.copy(),
                        self.obs_times.copy(), self.x_obs.copy())

    def negated(self) -> Skeleton:
        return Skeleton(self.T, self.psi.copy(), -self.x_psi, self.obs_times.copy(), -self.x_obs)

    def to_dict(self) -> dict:
        return {"T": self.T, "psi": self.psi.tolist(), "x_psi": self.x_psi.tolist(),
                "obs_times": self.obs_times.tolist(), "x_obs": self.x_obs.tolist()}

    @classmethod
    def from_dict(cls, d) -> Skeleton:
        return cls(d["T"], d["psi"], d["x_psi"], d["obs_times"], d["x_obs"])

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (self.T == other.T and np.array_equal(self.psi, other.psi)
                and np.array_equal(self.x_psi, other.x_psi)
                and np.array_equal(self.obs_times, other.obs_times)
                and np.array_equal(self.x_obs, other.x_obs))


@dataclass
class ObservationSet:
    """Noisy measurements ``y_o ~ Normal(X_o, sigma_y^2)`` at ``times`` in ``[0, T]``."""

    times: np.ndarray
    values: np.ndarray
    sigma_y: float = 0.2

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise InvalidArgument("observation times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("observation times must be strictly increasing")
        if not self.sigma_y > 0:
            raise InvalidArgument("sigma_y must be positive")

    def __len__(self):
        return self.times.size

    def skeleton_times(self, T: float) -> np.ndarray:
        """``{0} ∪ times ∪ {T}``: the fixed time set O of a posterior skeleton."""
        if self.times.size and (self.times[0] < 0 or self.times[-1] > T):
            raise InvalidArgument("observation times must lie in [0, T]")
        return np.union1d(np.union1d([0.0], self.times), [T])

    def aligned(self, times):
        """Observed values aligned with ``times`` (NaN where nothing is observed)."""
        times = np.asarray(times, dtype=float)
        out = np.full(times.size, np.nan)
        idx = np.searchsorted(times, self.times)
        ok = (idx < times.size)
        ok[ok] &= times[idx[ok]] == self.times[ok]
        if not ok.all():
            raise InvalidArgument("observation times are missing from the time grid")
        out[idx] = self.values
        return out

    def loglik(self, x_at_times) -> float:
        """Gaussian log-likelihood with normalising constants."""
        r = (np.asarray(x_at_times, dtype=float) - self.values) / self.sigma_y
        return float(-0.5 * np.sum(r * r) - self.times.size * (math.log(self.sigma_y)
                                                               + 0.5 * math.log(2 * math.pi)))


def gaussian_loglik(y, x, sigma_y):
    """Elementwise ``log Normal(y | x, sigma_y^2)``."""
    r = (y - x) / sigma_y
    return -0.5 * r * r - math.log(sigma_y) - 0.5 * math.log(2 * math.pi)
