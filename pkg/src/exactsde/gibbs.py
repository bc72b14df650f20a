"""Auxiliary-variable Gibbs sampler for EA1 diffusions.

The chain state is a skeleton ``(Psi, X_Psi, X_O)`` together with ``theta``.
One sweep

1. refreshes the Poisson set: ``Gamma ~ PP(M)`` is imputed from Brownian
   bridges through the current skeleton and each point is kept with
   probability ``1 - phi(X_g)/M``; the survivors replace ``Psi``;
2. updates the path values on ``Psi ∪ O`` with an HMC kernel;
3. optionally proposes the sign flip ``X -> -X`` (symmetric models only);
4. optionally updates ``theta`` by Metropolis-Hastings.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from numba import njit

from .bridge import impute
from .ea1 import ea1_simulate, simulate_path
from .errors import ContractViolation, InvalidArgument, InvalidConfiguration
from .hmc import HmcConfig, PathTarget, _transition, hmc_step, mass_vector
from .models import PointMass, initial_code, phi_scalar
from .params import ThetaProposal, theta_step
from .skeleton import Skeleton
from .stochastic import sample_poisson_process


def _new_counters():
    return {"sweeps": 0, "hmc_accept": 0, "flip_proposed": 0, "flip_accept": 0,
            "theta_proposed": 0, "theta_accept": 0, "psi_total": 0}


@dataclass
class ChainState:
    skeleton: Skeleton
    theta: float
    rng: object
    counters: dict = field(default_factory=_new_counters)
    last: dict | None = None
    last_hmc: bool = False
    cache: dict = field(default_factory=dict, repr=False, compare=False)


@dataclass(frozen=True)
class GibbsConfig:
    hmc: HmcConfig = HmcConfig()
    flip_move: bool = False
    infer_theta: bool = False
    theta_proposal: ThetaProposal = ThetaProposal()
    monitor_times: tuple | None = None

    def monitors(self, T):
        return np.array([T / 2.0]) if self.monitor_times is None else np.asarray(
            self.monitor_times, dtype=float)


@functools.lru_cache(maxsize=64)
def _symmetric(model) -> bool:
    return model.is_symmetric()


def current_model(state: ChainState, model):
    return model.with_theta(state.theta)


def refresh_grid(state: ChainState, model) -> ChainState:
    """Resample ``Psi`` given the path by thinning a rate-M Poisson process."""
    skel = state.skeleton
    rng = state.rng
    M = model.M
    gamma = sample_poisson_process(M, (0.0, skel.T), rng)
    kt, kx, _ = skel.merged()
    if gamma.size:
        # a draw landing exactly on a skeleton time has probability zero
        gamma = gamma[~np.isin(gamma, kt)]
    xg = impute(kt, kx, gamma, rng.gen.standard_normal(gamma.size))
    keep = 1.0 - model.phi(xg) / M
    if np.any((keep < -1e-12) | (keep > 1.0 + 1e-12)):
        raise ContractViolation("keep probability outside [0, 1]; phi exceeds M")
    survive = rng.gen.random(gamma.size) < keep
    state.skeleton = Skeleton(skel.T, gamma[survive], xg[survive], skel.obs_times, skel.x_obs)
    return state


def update_path(state: ChainState, model, obs, hmc_cfg: HmcConfig) -> ChainState:
    """One HMC move of the path values on ``Psi ∪ O`` with ``Psi`` held fixed."""
    skel = state.skeleton
    target, q = PathTarget.from_skeleton(skel, model, obs)
    q_new, accepted = hmc_step(q, target, hmc_cfg, state.rng)
    if accepted:
        state.skeleton = Skeleton.from_merged(skel.T, target.times, q_new, target.is_psi)
        state.counters["hmc_accept"] += 1
    state.last_hmc = accepted
    return state


def flip_log_ratio(skeleton: Skeleton, model, obs) -> float:
    """Log acceptance ratio of ``X -> -X``: initial density and likelihood only."""
    init = model.initial
    out = init.logpdf(-skeleton.x0) - init.logpdf(skeleton.x0)
    if obs is not None and len(obs):
        x = skeleton.x_obs[np.searchsorted(skeleton.obs_times, obs.times)]
        out += obs.loglik(-x) - obs.loglik(x)
    return out


def sign_flip_move(state: ChainState, model, obs) -> tuple[ChainState, bool]:
    """Propose negating the whole skeleton; returns ``(state, accepted)``."""
    if not _symmetric(model):
        raise InvalidConfiguration(f"sign flip needs a symmetric model, {model.name!r} is not")
    log_r = flip_log_ratio(state.skeleton, model, obs)
    if log_r >= 0 or math.log(state.rng.gen.random()) < log_r:
        state.skeleton = state.skeleton.negated()
        return state, True
    return state, False


@njit(cache=True, error_model="numpy")
def _fused_sweep(kt, kx, kpsi, o_y, o_has_y, inv_var_y, T, kind, p, M, init_mode, init_mean,
                 init_prec, eps, n_lf, mass, mass_mode, flip, mon_t, u, z):
    """Refresh, HMC, optional flip and monitor imputation in one pass.

    ``u`` holds ``2K + 3`` uniforms and ``z`` holds ``2K + |O| + n_mon``
    normals, where ``K`` is the Poisson count; both are consumed in fixed
    slots so the random stream advances by the same amount whatever
    happens.  Returns the new merged skeleton, the monitors, the flags
    ``(hmc_acc, flip_proposed, flip_acc)`` and a status (0 ok, 1 phi > M).
    """
    K = (u.size - 3) // 2
    n_o = o_y.size
    n_mon = mon_t.size
    gamma = np.sort(u[:K] * T)
    # drop draws that coincide with a skeleton time (probability zero)
    keep_g = np.ones(K, dtype=np.bool_)
    j = 0
    for i in range(K):
        while j < kt.size and kt[j] < gamma[i]:
            j += 1
        if j < kt.size and kt[j] == gamma[i]:
            keep_g[i] = False
    xg = impute(kt, kx, gamma, z[:K])
    n_new = 0
    for i in range(K):
        if not keep_g[i]:
            continue
        f = phi_scalar(kind, p, xg[i]) / M
        if f > 1.0 + 1e-12 or f < -1e-12:
            return kt, kx, kpsi, np.empty(0), 0, 0, 0, 1
        keep_g[i] = u[K + i] < 1.0 - f
        n_new += keep_g[i]
    # merge O (the non-Poisson knots) with the surviving draws
    n = n_o + n_new
    nt = np.empty(n)
    nx = np.empty(n)
    npsi = np.zeros(n, dtype=np.bool_)
    has_y = np.zeros(n, dtype=np.bool_)
    y = np.zeros(n)
    a = 0
    b = 0
    o = 0
    for k in range(n):
        while a < kt.size and kpsi[a]:
            a += 1
        while b < K and not keep_g[b]:
            b += 1
        if b < K and (a >= kt.size or gamma[b] < kt[a]):
            nt[k] = gamma[b]
            nx[k] = xg[b]
            npsi[k] = True
            b += 1
        else:
            nt[k] = kt[a]
            nx[k] = kx[a]
            has_y[k] = o_has_y[o]
            y[k] = o_y[o]
            o += 1
            a += 1
    dt = np.diff(nt)
    m = mass_vector(dt, mass, mass_mode)
    mom = z[K:K + n] * np.sqrt(m)
    if init_mode == 0:
        mom[0] = 0.0
    nx, hmc_acc = _transition(nx, mom, math.log(u[2 * K]), eps, n_lf, 1.0 / m, dt, npsi, has_y,
                              y, inv_var_y, kind, p, M, init_mode, init_mean, init_prec)
    flip_prop = 0
    flip_acc = 0
    if flip and u[2 * K + 1] < 0.5:
        flip_prop = 1
        x0 = nx[0]
        if init_mode == 0:
            log_r = 0.0 if x0 == 0.0 else -np.inf
        elif init_mode == 1:
            log_r = -2.0 * init_prec * init_mean * x0
        else:
            log_r = 0.0
        for k in range(n):
            if has_y[k]:
                # (y + x)^2 - (y - x)^2 = 4 x y
                log_r -= 2.0 * inv_var_y * nx[k] * y[k]
        if log_r >= 0.0 or math.log(u[2 * K + 2]) < log_r:
            nx = -nx
            flip_acc = 1
    mon = impute(nt, nx, mon_t, z[K + n_o + K:K + n_o + K + n_mon])
    return nt, nx, npsi, mon, int(hmc_acc), flip_prop, flip_acc, 0


@functools.lru_cache(maxsize=256)
def _model_args(model):
    mode, mean, prec = initial_code(model.initial)
    return model.kind, model.p, float(model.M), mode, float(mean), float(prec)


def _obs_args(state, obs):
    skel = state.skeleton
    key = (id(obs), skel.obs_times.size, skel.T)
    hit = state.cache.get("obs")
    if hit is None or hit[0] != key:
        if obs is not None and len(obs):
            y = obs.aligned(skel.obs_times)
            args = (np.where(np.isnan(y), 0.0, y), ~np.isnan(y), 1.0 / obs.sigma_y ** 2)
        else:
            args = (np.zeros(skel.obs_times.size), np.zeros(skel.obs_times.size, np.bool_), 0.0)
        hit = (key, args)
        state.cache["obs"] = hit
    return hit[1]


@njit(cache=True, error_model="numpy")
def _fused_block(kt, kx, kpsi, o_y, o_has_y, inv_var_y, T, kind, p, M, init_mode, init_mean,
                 init_prec, eps, n_lf, mass, mass_mode, flip, mon_t, counts, u, z):
    B = counts.size
    n_o = o_y.size
    n_mon = mon_t.size
    mons = np.empty((B, n_mon))
    flags = np.zeros((B, 4), dtype=np.int64)  # n_psi, hmc, flip proposed, flip accepted
    pu = 0
    pz = 0
    for b in range(B):
        K = counts[b]
        nu = 2 * K + 3
        nz = 2 * K + n_o + n_mon
        kt, kx, kpsi, mon, h_acc, f_prop, f_acc, status = _fused_sweep(
            kt, kx, kpsi, o_y, o_has_y, inv_var_y, T, kind, p, M, init_mode, init_mean,
            init_prec, eps, n_lf, mass, mass_mode, flip, mon_t, u[pu:pu + nu], z[pz:pz + nz])
        if status:
            return kt, kx, kpsi, mons[:b], flags[:b], 1
        pu += nu
        pz += nz
        mons[b] = mon
        flags[b, 0] = kt.size - n_o
        flags[b, 1] = h_acc
        flags[b, 2] = f_prop
        flags[b, 3] = f_acc
    return kt, kx, kpsi, mons, flags, 0


def fused_sweeps(state: ChainState, model, obs, cfg: GibbsConfig, monitor_times, n: int = 1):
    """``n`` sweeps of grid refresh, HMC path update and optional flip in one compiled call.

    Samples the same kernels as :func:`refresh_grid`, :func:`update_path`
    and :func:`sign_flip_move` applied in turn.  Random numbers are drawn
    per block: ``n`` Poisson counts ``K_b``, then ``sum(2 K_b + 3)``
    uniforms, then ``sum(2 K_b + |O| + n_mon)`` normals, each sweep using
    fixed slots.  Returns ``(monitors, flags)`` with one row per sweep;
    ``flags`` columns are ``|Psi|``, HMC accepted, flip proposed, flip
    accepted.
    """
    skel = state.skeleton
    gen = state.rng.gen
    kind, p, M, mode, mean, prec = _model_args(model)
    o_y, o_has_y, inv_var_y = _obs_args(state, obs)
    counts = gen.poisson(M * skel.T, n)
    u = gen.random(int(2 * counts.sum() + 3 * n))
    z = gen.standard_normal(int(2 * counts.sum()) + n * (o_y.size + monitor_times.size))
    kt, kx, kpsi = skel.merged()
    h = cfg.hmc
    nt, nx, npsi, mons, flags, status = _fused_block(
        kt, kx, kpsi, o_y, o_has_y, inv_var_y, float(skel.T), kind, p, M, mode, mean, prec,
        float(h.step_size), int(h.n_leapfrog), float(h.mass), h.mode_code,
        bool(cfg.flip_move), monitor_times, counts, u, z)
    state.skeleton = Skeleton.from_merged(skel.T, nt, nx, npsi)
    if status:
        raise ContractViolation("keep probability outside [0, 1]; phi exceeds M")
    return mons, flags


def _monitor_times(state, cfg):
    key = ("mon", None if cfg.monitor_times is None else tuple(cfg.monitor_times))
    mon_t = state.cache.get(key)
    if mon_t is None:
        mon_t = state.cache[key] = cfg.monitors(state.skeleton.T)
    return mon_t


def _check_flip(cfg, m):
    if cfg.flip_move and not _symmetric(m):
        raise InvalidConfiguration(f"sign flip needs a symmetric model, {m.name!r} is not")


def _record(state, mon, flag, theta_acc):
    return {"monitors": mon, "n_psi": int(flag[0]), "theta": state.theta,
            "hmc_accept": bool(flag[1]), "flip_accept": bool(flag[3]),
            "theta_accept": theta_acc}


def _count(c, flags):
    c["sweeps"] += flags.shape[0]
    c["psi_total"] += int(flags[:, 0].sum())
    c["hmc_accept"] += int(flags[:, 1].sum())
    c["flip_proposed"] += int(flags[:, 2].sum())
    c["flip_accept"] += int(flags[:, 3].sum())


def gibbs_sweep(state: ChainState, model, obs, cfg: GibbsConfig, trace=None) -> ChainState:
    """Grid refresh, path update, optional flip and optional theta update.

    ``model`` is any member of the family; it is bound to ``state.theta``.
    The sweep record (monitored values, ``|Psi|``, flags) is stored in
    ``state.last`` and appended to ``trace`` if given.  The flip is
    proposed with probability one half and MH-corrected.
    """
    m = current_model(state, model)
    _check_flip(cfg, m)
    mons, flags = fused_sweeps(state, m, obs, cfg, _monitor_times(state, cfg), 1)
    c = state.counters
    _count(c, flags)
    state.last_hmc = bool(flags[0, 1])
    theta_acc = False
    if cfg.infer_theta:
        c["theta_proposed"] += 1
        state, theta_acc = theta_step(state, model, obs, cfg.theta_proposal)
        c["theta_accept"] += theta_acc
    state.last = _record(state, mons[0], flags[0], theta_acc)
    if trace is not None:
        trace.append(state.last)
    return state


def init_state(model, T: float, rng, obs=None, method: str = "auto", x0=None) -> ChainState:
    """Starting state for a chain.

    ``method="ea1"`` draws an exact prior skeleton (no observations allowed
    beyond the endpoints); ``"prior"`` imputes exact prior values at the
    observation times with an empty Poisson set; ``"observations"`` places
    the path at the observed values.  ``"auto"`` uses ``ea1`` without
    observations and ``observations`` otherwise.
    """
    if method == "auto":
        method = "ea1" if obs is None or not len(obs) else "observations"
    if method == "ea1":
        if obs is not None and len(obs):
            raise InvalidArgument("ea1 initialisation is for prior simulation only")
        skel = ea1_simulate(model, T, rng, x0=x0).skeleton
    else:
        o_times = obs.skeleton_times(T) if obs is not None else np.array([0.0, T])
        if method == "prior":
            x = simulate_path(model, T, o_times, rng, x0=x0)
        elif method == "observations":
            y = obs.aligned(o_times)
            x = np.interp(o_times, obs.times, obs.values)
            x[~np.isnan(y)] = y[~np.isnan(y)]
            if x0 is not None:
                x[0] = x0
            elif isinstance(model.initial, PointMass):
                x[0] = model.initial.value
        else:
            raise InvalidArgument(f"unknown initialisation {method!r}")
        skel = Skeleton(T, np.empty(0), np.empty(0), o_times, x)
    return ChainState(skel.validate(), model.theta, rng)


def run_chain(state: ChainState, model, obs, cfg: GibbsConfig, n_sweeps: int, trace=None,
              block: int = 1):
    """Run ``n_sweeps`` sweeps; returns the monitor values as an ``(n, k)`` array.

    With ``block > 1`` (and fixed ``theta``) sweeps run ``block`` at a time in
    one compiled call.  The chain has the same law but draws its random
    numbers in a different order, so the realisation depends on ``block``.
    """
    mon_t = _monitor_times(state, cfg)
    out = np.empty((n_sweeps, mon_t.size))
    if cfg.infer_theta or block <= 1:
        for i in range(n_sweeps):
            gibbs_sweep(state, model, obs, cfg, trace)
            out[i] = state.last["monitors"]
        return out
    m = current_model(state, model)
    _check_flip(cfg, m)
    done = 0
    while done < n_sweeps:
        k = min(block, n_sweeps - done)
        mons, flags = fused_sweeps(state, m, obs, cfg, mon_t, k)
        _count(state.counters, flags)
        out[done:done + k] = mons
        if trace is not None:
            for j in range(k):
                trace.append(_record(state, mons[j], flags[j], False))
        state.last_hmc = bool(flags[-1, 1])
        state.last = _record(state, mons[-1], flags[-1], False)
        done += k
    return out
