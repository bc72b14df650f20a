"""Hamiltonian Monte Carlo on path values at the skeleton times.

Given the Poisson set, the path values ``q`` at the sorted times ``0 = t_0 <
... < t_n = T`` (Poisson and observation times together) have log density,
up to a constant,

    log pi(q_0) + A(q_n) - A(q_0) - sum_i (q_i - q_{i-1})^2 / (2 (t_i - t_{i-1}))
        + sum_obs log N(y_o | q_o, sigma_y^2) + sum_psi log(1 - phi(q_g) / M).

The Gaussian increments are the Brownian reference; together with the
``A`` endpoint term they equal the h-biased bridge law times the ``X_0``
dependent normaliser, which keeps the density exact when ``X_0`` moves.
The increment structure is tridiagonal, so density and gradient cost O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ContractViolation, InvalidArgument
from .models import A_scalar, alpha_scalar, initial_code, phi1_scalar, phi_scalar

_INIT_POINT, _INIT_NORMAL = 0, 1


MASS_MODES = ("scalar", "stiffness")


@dataclass(frozen=True)
class HmcConfig:
    """Leapfrog step size, number of steps and mass.

    ``mass_mode="scalar"`` uses ``mass * I``.  ``"stiffness"`` uses the
    diagonal ``m_i = max(mass, 1/dt_left + 1/dt_right)``, which keeps the
    leapfrog stable when Poisson times crowd together (large ``M``).  The
    mass depends on the times only, which are fixed during the update.
    """

    step_size: float = 0.2
    n_leapfrog: int = 5
    mass: float = 100.0
    mass_mode: str = "scalar"

    def __post_init__(self):
        if not (self.step_size > 0 and self.n_leapfrog >= 1 and self.mass > 0):
            raise InvalidArgument("HMC step size, leapfrog count and mass must be positive")
        if self.mass_mode not in MASS_MODES:
            raise InvalidArgument(f"unknown mass mode {self.mass_mode!r}")

    @property
    def mode_code(self) -> int:
        return MASS_MODES.index(self.mass_mode)


@njit(cache=True)
def mass_vector(dt, mass, mode):
    """Per-coordinate masses for path values at times with increments ``dt``."""
    n = dt.size + 1
    m = np.full(n, mass)
    if mode == 1:
        for i in range(n):
            k = 0.0
            if i > 0:
                k += 1.0 / dt[i - 1]
            if i < n - 1:
                k += 1.0 / dt[i]
            m[i] = max(mass, k)
    return m


@njit(cache=True, error_model="numpy")
def _logp(q, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec):
    n = q.size
    lp = A_scalar(kind, p, q[n - 1]) - A_scalar(kind, p, q[0])
    for i in range(1, n):
        d = q[i] - q[i - 1]
        lp -= 0.5 * d * d / dt[i - 1]
    if init_mode == _INIT_NORMAL:
        r = q[0] - init_mean
        lp -= 0.5 * init_prec * r * r
    for i in range(n):
        if has_y[i]:
            r = q[i] - y[i]
            lp -= 0.5 * inv_var_y * r * r
        if is_psi[i]:
            f = phi_scalar(kind, p, q[i])
            if f >= M:
                return -np.inf
            lp += math.log1p(-f / M)
    return lp


@njit(cache=True, error_model="numpy")
def _grad(q, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec):
    n = q.size
    g = np.zeros(n)
    for i in range(1, n):
        d = (q[i] - q[i - 1]) / dt[i - 1]
        g[i] -= d
        g[i - 1] += d
    g[n - 1] += alpha_scalar(kind, p, q[n - 1])
    g[0] -= alpha_scalar(kind, p, q[0])
    if init_mode == _INIT_NORMAL:
        g[0] -= init_prec * (q[0] - init_mean)
    for i in range(n):
        if has_y[i]:
            g[i] -= inv_var_y * (q[i] - y[i])
        if is_psi[i]:
            g[i] -= phi1_scalar(kind, p, q[i]) / (M - phi_scalar(kind, p, q[i]))
    if init_mode == _INIT_POINT:
        g[0] = 0.0
    return g


@njit(cache=True, error_model="numpy")
def _leapfrog(q, mom, eps, n_steps, inv_mass, dt, is_psi, has_y, y, inv_var_y, kind, p, M,
              init_mode, init_mean, init_prec):
    q = q.copy()
    mom = mom.copy()
    g = _grad(q, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec)
    for _ in range(n_steps):
        mom += 0.5 * eps * g
        q += eps * inv_mass * mom
        g = _grad(q, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec)
        mom += 0.5 * eps * g
    return q, mom


@njit(cache=True, error_model="numpy")
def _transition(q0, mom, log_u, eps, n_steps, inv_mass, dt, is_psi, has_y, y, inv_var_y,
                kind, p, M, init_mode, init_mean, init_prec):
    lp0 = _logp(q0, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec)
    h0 = -lp0 + 0.5 * np.sum(inv_mass * mom * mom)
    q1, mom1 = _leapfrog(q0, mom, eps, n_steps, inv_mass, dt, is_psi, has_y, y, inv_var_y,
                         kind, p, M, init_mode, init_mean, init_prec)
    lp1 = _logp(q1, dt, is_psi, has_y, y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec)
    h1 = -lp1 + 0.5 * np.sum(inv_mass * mom1 * mom1)
    if not (math.isfinite(h1) and math.isfinite(h0)):
        return q0, False
    if log_u < h0 - h1:
        return q1, True
    return q0, False


class PathTarget:
    """Conditional density of the path values given the Poisson set.

    ``times`` are the sorted skeleton times (first 0, last T), ``is_psi`` marks
    Poisson times and ``y`` holds observed values aligned with ``times`` (NaN
    where unobserved).  With a point-mass initial law ``q[0]`` is held fixed.
    """

    def __init__(self, times, is_psi, model, y=None, sigma_y=None):
        times = np.asarray(times, dtype=float)
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise InvalidArgument("path times must be strictly increasing with at least 2 points")
        self.times = times
        self.model = model
        self.is_psi = np.asarray(is_psi, dtype=np.bool_)
        if y is None:
            y = np.full(times.size, np.nan)
        y = np.asarray(y, dtype=float)
        self.has_y = ~np.isnan(y)
        if self.has_y.any() and not (sigma_y and sigma_y > 0):
            raise InvalidArgument("observed values need a positive sigma_y")
        inv_var = 1.0 / sigma_y ** 2 if self.has_y.any() else 0.0
        mode, mean, prec = initial_code(model.initial)
        self.free_x0 = mode != _INIT_POINT
        self.args = (np.diff(times), self.is_psi, self.has_y, np.where(self.has_y, y, 0.0),
                     inv_var, model.kind, model.p, float(model.M), mode, float(mean), float(prec))

    @classmethod
    def from_skeleton(cls, skeleton, model, obs=None):
        times, values, is_psi = skeleton.merged()
        y = obs.aligned(times) if obs is not None and len(obs) else None
        target = cls(times, is_psi, model, y, obs.sigma_y if obs is not None else None)
        return target, values

    def log_density(self, q) -> float:
        return float(_logp(np.asarray(q, dtype=float), *self.args))

    def grad(self, q) -> np.ndarray:
        return _grad(np.asarray(q, dtype=float), *self.args)

    def check_bounds(self, q):
        """Raise if any Poisson-time value has ``phi`` above ``M``."""
        q = np.asarray(q, dtype=float)
        f = self.model.phi(q[self.is_psi])
        if np.any(f > self.model.M * (1 + 1e-12)):
            raise ContractViolation("phi exceeds M at a Poisson time")


def _split_times(times, obs, T):
    fixed = {0.0, float(T)}
    if obs is not None:
        fixed.update(map(float, obs.times))
    return np.array([t not in fixed for t in np.asarray(times, dtype=float)])


def _target(times, model, obs, T):
    times = np.asarray(times, dtype=float)
    if times[0] != 0 or times[-1] != T:
        raise InvalidArgument("path times must start at 0 and end at T")
    is_psi = _split_times(times, obs, T)
    y = obs.aligned(times) if obs is not None and len(obs) else None
    return PathTarget(times, is_psi, model, y, obs.sigma_y if obs is not None else None)


def log_target(q, times, model, obs, T) -> float:
    """Log conditional path density at sorted ``times``; times not in ``obs`` or {0, T} are Poisson."""
    target = _target(times, model, obs, T)
    target.check_bounds(q)
    return target.log_density(q)


def grad_log_target(q, times, model, obs, T) -> np.ndarray:
    target = _target(times, model, obs, T)
    target.check_bounds(q)
    return target.grad(q)


def leapfrog(q, mom, target: PathTarget, step_size: float, n_steps: int, mass):
    """``n_steps`` half-kick / drift / half-kick steps; returns ``(q, momentum)``.

    ``mass`` is a scalar or one mass per coordinate.
    """
    inv = 1.0 / np.asarray(mass, dtype=float) if np.ndim(mass) else 1.0 / float(mass)
    return _leapfrog(np.asarray(q, dtype=float), np.asarray(mom, dtype=float), step_size,
                     n_steps, inv, *target.args)


def hmc_step(q, target: PathTarget, cfg: HmcConfig, rng):
    """One HMC transition with momentum ``~ Normal(0, diag(m))``; returns ``(q', accepted)``.

    A non-finite Hamiltonian at the proposal is a rejection, never an error.
    """
    q = np.asarray(q, dtype=float)
    mass = mass_vector(target.args[0], float(cfg.mass), cfg.mode_code)
    mom = rng.gen.standard_normal(q.size) * np.sqrt(mass)
    if not target.free_x0:
        mom[0] = 0.0
    log_u = math.log(rng.gen.random())
    q_new, accepted = _transition(q, mom, log_u, cfg.step_size, cfg.n_leapfrog, 1.0 / mass,
                                  *target.args)
    return q_new, bool(accepted)
