"""Comparison samplers: Euler-Maruyama, particle filters and particle MCMC.

Two particle filters are provided.  The bootstrap filter propagates
particles with the Euler scheme.  The random-weight filter is exact in
expectation: a particle moves from ``x`` to ``x' ~ Normal(x, delta)`` and is
weighted by

    exp(A(x') - A(x) - L delta) * prod_{t in Psi} (1 - phi(X_t) / M),

with ``Psi ~ PP(M)`` on the segment and ``X`` a Brownian bridge from ``x`` to
``x'``.  By Campbell's formula the product has conditional mean
``exp(-int phi)``, so the weight is an unbiased estimate of the ratio of the
diffusion transition density to the Brownian one.

Both filters resample multinomially at every observation and copy whole
path histories, which degenerates for early times (as expected of a plain
bootstrap filter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ContractViolation, DegenerateFilter, InvalidArgument
from .models import A_scalar, PointMass, alpha_scalar, phi_scalar
from .params import ThetaProposal, propose_theta

_MAX_DRAWS = 1 << 21


def _n_steps(delta, dt):
    return max(1, math.ceil(delta / dt - 1e-9))


@njit(cache=True)
def _euler_block(x, h, z, kind, p):
    # z has shape (n_steps, n_particles)
    for k in range(z.shape[0]):
        for j in range(x.size):
            x[j] += alpha_scalar(kind, p, x[j]) * h + math.sqrt(h) * z[k, j]
    return x


def _euler_advance(model, x, delta, dt, rng):
    """Move every particle across ``delta`` with Euler steps of size ``<= dt``."""
    n = _n_steps(delta, dt)
    h = delta / n
    chunk = max(1, _MAX_DRAWS // max(1, x.size))
    done = 0
    while done < n:
        k = min(chunk, n - done)
        _euler_block(x, h, rng.gen.standard_normal((k, x.size)), model.kind, model.p)
        done += k
    return x


def euler_grid(T: float, dt: float) -> np.ndarray:
    """``{0, dt, 2 dt, ..., T}``; the last step is shorter if ``dt`` does not divide ``T``."""
    if not (dt > 0 and T > 0):
        raise InvalidArgument("T and dt must be positive")
    n = _n_steps(T, dt)
    g = np.arange(n + 1) * dt
    g[-1] = T
    return g


def euler_simulate(model, T: float, dt: float, rng, n_paths: int | None = None, x0=None,
                   record_times=None):
    """Euler-Maruyama paths ``X_{t+h} = X_t + alpha(X_t) h + sqrt(h) z``.

    Returns ``(grid, values)``.  ``values`` has one row per path (or is 1-D
    when ``n_paths`` is None).  With ``record_times`` only those times are
    stored; each is rounded onto the grid.
    """
    grid = euler_grid(T, dt)
    m = 1 if n_paths is None else int(n_paths)
    if x0 is None:
        x = np.asarray(model.initial.sample(rng, m), dtype=float).copy()
    else:
        x = np.full(m, float(x0))
    if record_times is None:
        keep = np.arange(grid.size)
    else:
        keep = np.unique(np.abs(grid[:, None] - np.asarray(record_times, float)[None, :]).argmin(0))
    out = np.empty((m, keep.size))
    col = 0
    if keep[0] == 0:
        out[:, 0] = x
        col = 1
    for i in range(1, grid.size):
        h = grid[i] - grid[i - 1]
        _euler_block(x, h, rng.gen.standard_normal((1, m)), model.kind, model.p)
        if col < keep.size and keep[col] == i:
            out[:, col] = x
            col += 1
    times = grid[keep]
    return times, (out[0] if n_paths is None else out)


# ---------------------------------------------------------------------------
# Particle filters


@dataclass
class PfResult:
    """Output of a particle filter.

    ``times`` are the recorded times (observation times, extra record
    times and T); ``paths[k]`` is the history of particle k at those times
    after the last resampling; ``weights`` are the normalised weights of
    the final particles (uniform when the last step resampled);
    ``log_lik`` is the log of the product of mean unnormalised weights.
    ``last_values`` and ``last_weights`` are the particles and normalised
    weights at the last observation, before its resampling.
    """

    times: np.ndarray
    paths: np.ndarray
    weights: np.ndarray
    log_lik: float
    last_values: np.ndarray
    last_weights: np.ndarray


def _boundaries(obs, T, record_times):
    pts = [np.array([T])]
    if obs is not None and len(obs):
        pts.append(obs.times)
    if record_times is not None:
        pts.append(np.asarray(record_times, dtype=float))
    b = np.unique(np.concatenate(pts))
    if b[0] < 0 or b[-1] > T:
        raise InvalidArgument("observation and record times must lie in [0, T]")
    return b


def _log_mean_exp(lw):
    mx = np.max(lw)
    if not np.isfinite(mx):
        return mx, None
    w = np.exp(lw - mx)
    return mx + math.log(np.mean(w)), w / w.sum()


def _run_filter(model, obs, n_particles, rng, T, record_times, advance):
    """Shared filter loop; ``advance(x, t0, t1)`` returns the new particles and log weights."""
    if n_particles < 1:
        raise InvalidArgument("need at least one particle")
    T = float(T if T is not None else obs.times[-1])
    bounds = _boundaries(obs, T, record_times)
    obs_idx = {}
    if obs is not None:
        obs_idx = {float(t): i for i, t in enumerate(obs.times)}
    x = np.asarray(model.initial.sample(rng, n_particles), dtype=float).copy()
    hist = np.empty((n_particles, bounds.size))
    lw = np.zeros(n_particles)
    log_lik = 0.0
    last_values = x.copy()
    last_weights = np.full(n_particles, 1.0 / n_particles)
    t_prev = 0.0
    step = 0
    for j, t in enumerate(bounds):
        if t > t_prev:
            x, seg_lw = advance(x, t_prev, t)
            lw += seg_lw
        hist[:, j] = x
        i = obs_idx.get(float(t))
        if i is not None:
            r = (obs.values[i] - x) / obs.sigma_y
            lw += -0.5 * r * r - math.log(obs.sigma_y) - 0.5 * math.log(2 * math.pi)
            lme, w = _log_mean_exp(lw)
            if w is None:
                raise DegenerateFilter(step)
            log_lik += lme
            last_values, last_weights = x.copy(), w
            idx = rng.gen.choice(n_particles, n_particles, p=w)
            x = x[idx]
            hist = hist[idx]
            lw = np.zeros(n_particles)
            step += 1
        t_prev = t
    _, w = _log_mean_exp(lw)
    if w is None:
        raise DegenerateFilter(step)
    return PfResult(bounds, hist, w, log_lik, last_values, last_weights)


def bootstrap_pf(model, obs, n_particles: int, dt: float, rng, T=None, record_times=None) -> PfResult:
    """Bootstrap filter on the Euler discretisation with step ``<= dt``."""

    def advance(x, t0, t1):
        return _euler_advance(model, x, t1 - t0, dt, rng), 0.0

    return _run_filter(model, obs, n_particles, rng, T, record_times, advance)


@njit(cache=True, error_model="numpy")
def _rw_log_weights(x0, x1, delta, counts, u_times, z, kind, p, M, L):
    n = x0.size
    out = np.empty(n)
    pos = 0
    for k in range(n):
        a = x0[k]
        b = x1[k]
        lw = A_scalar(kind, p, b) - A_scalar(kind, p, a) - L * delta
        pt = 0.0
        px = a
        for i in range(pos, pos + counts[k]):
            t = u_times[i]
            w = (t - pt) / (delta - pt)
            var = (t - pt) * (delta - t) / (delta - pt)
            xv = px + w * (b - px) + math.sqrt(var) * z[i]
            f = phi_scalar(kind, p, xv) / M
            if f > 1.0 + 1e-12 or f < 0.0:
                return out, k
            lw += math.log(1.0 - f) if f < 1.0 else -np.inf
            pt = t
            px = xv
        pos += counts[k]
        out[k] = lw
    return out, -1


def rw_segment_log_weights(model, x0, x1, delta, rng):
    """Log random weights for moves ``x0 -> x1`` over a segment of length ``delta``."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    counts = rng.gen.poisson(model.M * delta, x0.size)
    total = int(counts.sum())
    u = rng.gen.uniform(0.0, delta, total)
    # sort the times within each particle's block
    owner = np.repeat(np.arange(x0.size), counts)
    u = u[np.lexsort((u, owner))]
    z = rng.gen.standard_normal(total)
    lw, bad = _rw_log_weights(x0, x1, delta, counts, u, z, model.kind, model.p, model.M, model.L)
    if bad >= 0:
        raise ContractViolation("phi/M outside [0, 1] in the random-weight filter")
    return lw


def random_weight_pf(model, obs, n_particles: int, rng, T=None, record_times=None) -> PfResult:
    """Random-weight particle filter with Brownian endpoint proposals."""

    def advance(x, t0, t1):
        delta = t1 - t0
        x1 = x + math.sqrt(delta) * rng.gen.standard_normal(x.size)
        return x1, rw_segment_log_weights(model, x, x1, delta, rng)

    return _run_filter(model, obs, n_particles, rng, T, record_times, advance)


# ---------------------------------------------------------------------------
# Particle MCMC


@dataclass(frozen=True)
class PfConfig:
    kind: str = "euler"
    n_particles: int = 50
    dt: float = 0.01

    def __post_init__(self):
        if self.kind not in ("euler", "rw"):
            raise InvalidArgument(f"unknown particle filter {self.kind!r}")
        if self.n_particles < 1 or not self.dt > 0:
            raise InvalidArgument("n_particles and dt must be positive")


def run_pf(model, obs, cfg: PfConfig, rng, T=None, record_times=None) -> PfResult:
    if cfg.kind == "euler":
        return bootstrap_pf(model, obs, cfg.n_particles, cfg.dt, rng, T, record_times)
    return random_weight_pf(model, obs, cfg.n_particles, rng, T, record_times)


@dataclass
class PimhState:
    theta: float
    path: np.ndarray
    log_lik: float
    times: np.ndarray


def _pick(res: PfResult, rng):
    k = int(rng.gen.choice(res.weights.size, p=res.weights))
    return res.paths[k].copy()


def pimh_init(model, obs, cfg: PfConfig, rng, T=None, record_times=None) -> PimhState:
    res = run_pf(model, obs, cfg, rng, T, record_times)
    return PimhState(model.theta, _pick(res, rng), res.log_lik, res.times)


def pimh_step(current: PimhState, model, obs, cfg: PfConfig, rng, proposal: ThetaProposal | None = None,
              T=None, record_times=None):
    """One particle independent Metropolis-Hastings step; returns ``(state, accepted)``.

    With ``proposal=None`` the parameter stays fixed and the step is the
    path-only particle MCMC move, accepted with ``min(1, P*/P)``.
    """
    theta = current.theta
    log_q = 0.0
    log_prior = 0.0
    new_theta = theta
    if proposal is not None and not isinstance(model.theta_prior, PointMass):
        new_theta, log_q = propose_theta(theta, model, proposal, rng)
        prior = model.theta_prior
        log_prior = prior.logpdf(new_theta) - prior.logpdf(theta)
        if not math.isfinite(log_prior):
            return current, False
    try:
        m = model.with_theta(new_theta)
    except InvalidArgument:
        return current, False
    try:
        res = run_pf(m, obs, cfg, rng, T, record_times)
    except DegenerateFilter:
        return current, False
    log_r = res.log_lik - current.log_lik + log_prior + log_q
    if math.log(rng.gen.random()) < log_r:
        return PimhState(new_theta, _pick(res, rng), res.log_lik, res.times), True
    return current, False
