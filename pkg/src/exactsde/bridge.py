"""Brownian-bridge conditionals and the h-biased endpoint sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgument, UnsupportedModel

_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class BridgeSpec:
    t_left: float
    x_left: float
    t_right: float
    x_right: float

    def __post_init__(self):
        if not self.t_right > self.t_left:
            raise InvalidArgument("bridge needs t_right > t_left")
        if not all(map(math.isfinite, (self.t_left, self.x_left, self.t_right, self.x_right))):
            raise InvalidArgument("bridge endpoints must be finite")

    def reversed(self) -> BridgeSpec:
        """The same bridge with time reflected about the interval midpoint."""
        return BridgeSpec(self.t_left, self.x_right, self.t_right, self.x_left)


def bridge_moments(spec: BridgeSpec, t: float):
    """Mean and variance of the bridge at a single time ``t`` in the open interval."""
    if not spec.t_left < t < spec.t_right:
        raise InvalidArgument(f"t={t} outside ({spec.t_left}, {spec.t_right})")
    ti = t - spec.t_left
    tj = spec.t_right - spec.t_left
    mean = ((tj - ti) * spec.x_left + ti * spec.x_right) / tj
    return mean, (tj - ti) * ti / tj


@njit(cache=True)
def impute(knot_t, knot_x, t_new, z):
    """Sample a Brownian path at ``t_new`` given exact values at ``knot_t``.

    Both time arrays are sorted and ``t_new`` lies in ``[knot_t[0], knot_t[-1]]``.
    Between consecutive knots the new points are filled left to right, each one
    conditioned on the previously filled point and the right knot.  ``z``
    holds one standard normal per new point.  A new time equal to a knot time
    returns the knot value.
    """
    out = np.empty(t_new.size)
    k = 0
    prev_t = knot_t[0]
    prev_x = knot_x[0]
    nk = knot_t.size
    for i in range(t_new.size):
        t = t_new[i]
        while k + 1 < nk and knot_t[k + 1] <= t:
            k += 1
            prev_t = knot_t[k]
            prev_x = knot_x[k]
        if t == knot_t[k]:
            out[i] = knot_x[k]
            continue
        rt = knot_t[k + 1]
        rx = knot_x[k + 1]
        w = (t - prev_t) / (rt - prev_t)
        var = (t - prev_t) * (rt - t) / (rt - prev_t)
        x = prev_x + w * (rx - prev_x) + math.sqrt(var) * z[i]
        out[i] = x
        prev_t = t
        prev_x = x
    return out


def sample_bridge(spec: BridgeSpec, times, rng) -> np.ndarray:
    """Joint draw from the Brownian bridge at sorted interior ``times``."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty(0)
    if np.any(np.diff(times) <= 0):
        raise InvalidArgument("bridge times must be strictly increasing")
    if times[0] <= spec.t_left or times[-1] >= spec.t_right:
        raise InvalidArgument("bridge times must lie strictly inside the interval")
    z = rng.gen.standard_normal(times.size)
    return impute(np.array([spec.t_left, spec.t_right]), np.array([spec.x_left, spec.x_right]),
                  times, z)


def _normal_logpdf(x, mean, var):
    return -0.5 * (_LOG_2PI + math.log(var) + (x - mean) ** 2 / var)


def log_bridge_density(spec: BridgeSpec, times, values, reverse: bool = False) -> float:
    """Log density of ``values`` at ``times`` under the bridge.

    Left to right conditions each value on its left neighbour and the right
    endpoint; ``reverse=True`` uses the mirror factorisation, conditioning on
    the left endpoint and the right neighbour.  Both give the same number.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise InvalidArgument("times and values must have the same length")
    if times.size and (np.any(np.diff(times) <= 0) or times[0] <= spec.t_left
                       or times[-1] >= spec.t_right):
        raise InvalidArgument("bridge times must be sorted and strictly interior")
    total = 0.0
    if not reverse:
        pt, px = spec.t_left, spec.x_left
        for t, x in zip(times, values):
            m, v = bridge_moments(BridgeSpec(pt, px, spec.t_right, spec.x_right), t)
            total += _normal_logpdf(x, m, v)
            pt, px = t, x
    else:
        nt, nx = spec.t_right, spec.x_right
        for t, x in zip(times[::-1], values[::-1]):
            m, v = bridge_moments(BridgeSpec(spec.t_left, spec.x_left, nt, nx), t)
            total += _normal_logpdf(x, m, v)
            nt, nx = t, x
    return total


def sample_h_endpoint(model, x0: float, T: float, rng, stats: dict | None = None) -> float:
    """Exact draw of ``X_T`` from ``h(u) ∝ exp(A(u) - (u - x0)^2 / 2T)``.

    Rejection sampling with a ``Normal(x0, T)`` proposal accepted with
    probability ``exp(A(u) - sup A)``.  If ``stats`` is given, its
    ``"proposals"`` and ``"accepted"`` counters are incremented.
    """
    if not T > 0:
        raise InvalidArgument("T must be positive")
    sup_a = model.sup_A
    if sup_a is None or not math.isfinite(sup_a):
        raise UnsupportedModel(
            f"model {model.name!r} has A unbounded above; supply a custom endpoint sampler")
    sd = math.sqrt(T)
    gen = rng.gen
    tries = 0
    while True:
        # draw in small batches to amortise generator overhead
        u = gen.normal(x0, sd, 4)
        acc = gen.random(4)
        ok = np.log(acc) < model.A(u) - sup_a
        if ok.any():
            j = int(np.argmax(ok))
            tries += j + 1
            if stats is not None:
                stats["proposals"] = stats.get("proposals", 0) + tries
                stats["accepted"] = stats.get("accepted", 0) + 1
            return float(u[j])
        tries += 4
