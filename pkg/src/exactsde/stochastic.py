"""Seeded random primitives: scalar draws, homogeneous Poisson processes, thinning.

Every chain or particle system owns one :class:`RngStream`.  Streams are
derived from ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`
spawn keys, so distinct ids give independent streams without shared state.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, InvalidArgument


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int = 0, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise InvalidArgument("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, stream_id: int) -> RngStream:
        """Another stream sharing this seed."""
        return RngStream(self.seed, stream_id)

    def get_state(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id,
                "bit_generator": self.gen.bit_generator.state}

    @classmethod
    def from_state(cls, state: dict) -> RngStream:
        rng = cls(state["seed"], state["stream_id"])
        rng.gen.bit_generator.state = state["bit_generator"]
        return rng

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_gaussian(mean, variance, rng: RngStream, size=None):
    if not variance > 0:
        raise InvalidArgument(f"variance must be positive, got {variance}")
    return rng.gen.normal(mean, np.sqrt(variance), size)


def sample_uniform(a, b, rng: RngStream, size=None):
    if not b > a:
        raise InvalidArgument(f"need b > a, got ({a}, {b})")
    return rng.gen.uniform(a, b, size)


def sample_exponential(rate, rng: RngStream, size=None):
    if not rate > 0:
        raise InvalidArgument(f"rate must be positive, got {rate}")
    return rng.gen.exponential(1.0 / rate, size)


def sample_poisson_process(rate: float, interval, rng: RngStream) -> np.ndarray:
    """Homogeneous Poisson process on the open interval ``(t0, t1)``.

    Count-then-sort: ``N ~ Poisson(rate * (t1 - t0))`` followed by ``N``
    sorted uniforms.  Returns a sorted float array, possibly empty.
    """
    t0, t1 = interval
    if rate < 0:
        raise InvalidArgument(f"rate must be non-negative, got {rate}")
    if not t1 > t0:
        raise InvalidArgument(f"empty interval ({t0}, {t1})")
    if rate == 0:
        return np.empty(0)
    n = rng.gen.poisson(rate * (t1 - t0))
    pts = rng.gen.uniform(t0, t1, n)
    pts.sort()
    # uniform() is half-open; a draw exactly at t0 is measure zero but drop it anyway
    return pts[pts > t0]


def thin(points: np.ndarray, keep_prob, rng: RngStream) -> np.ndarray:
    """Keep each point independently with probability ``keep_prob(t)``.

    ``keep_prob`` is a scalar or a callable evaluated on the whole array.
    Probabilities outside [0, 1] raise :class:`ContractViolation`.
    """
    points = np.asarray(points, dtype=float)
    if callable(keep_prob):
        p = np.broadcast_to(np.asarray(keep_prob(points), dtype=float), points.shape)
    else:
        p = np.full(points.shape, float(keep_prob))
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ContractViolation("keep probability outside [0, 1]")
    u = rng.gen.random(points.size)
    return points[u < p]
