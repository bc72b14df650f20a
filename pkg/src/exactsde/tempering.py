"""Parallel tempering over the tempered sine family ``alpha_c(x) = c sin(x)``.

Each rung runs its own Gibbs chain.  A swap proposes exchanging the
skeletons of two neighbouring rungs ``i`` and ``j`` and is accepted with

    min(1, P_ci(S_j) P_cj(S_i) / (P_ci(S_i) P_cj(S_j))),

where ``log P_c(S) = |Psi| log M_c - M_c T + sum_Psi log(1 - phi_c/M_c)
+ A_c(X_T) - A_c(X_0)``.  Every factor of the joint density that depends on
``c`` and on the skeleton is included; the initial density, Brownian
increments and likelihood do not depend on ``c`` and cancel.  Random
streams stay with their rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .gibbs import ChainState, GibbsConfig, gibbs_sweep, init_state
from .models import PointMass, tempered_sine_model

DEFAULT_LADDER = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def log_skeleton_density(skeleton, c: float, model=None) -> float:
    """Log density of ``(Psi, X_Psi)`` under the tempered model at ``c``."""
    m = model if model is not None else tempered_sine_model(c)
    M = m.M
    out = skeleton.psi.size * math.log(M) - M * skeleton.T
    out += m.A(skeleton.xT) - m.A(skeleton.x0)
    if skeleton.psi.size:
        f = m.phi(skeleton.x_psi) / M
        if np.any(f >= 1.0):
            return -math.inf
        out += float(np.sum(np.log1p(-f)))
    return float(out)


@dataclass
class Ladder:
    c_values: tuple
    states: list
    models: list
    rng: object
    swaps_proposed: np.ndarray = field(default=None)
    swaps_accepted: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.c_values, dtype=float)
        if c.size < 1 or c[-1] != 1.0 or np.any(np.diff(c) < 0) or c[0] < 0:
            raise InvalidArgument("ladder must be nondecreasing in [0, 1] and end at 1")
        if self.swaps_proposed is None:
            self.swaps_proposed = np.zeros(max(c.size - 1, 0), dtype=int)
            self.swaps_accepted = np.zeros(max(c.size - 1, 0), dtype=int)

    @property
    def top(self) -> ChainState:
        return self.states[-1]


def make_ladder(T: float, rng, c_values=DEFAULT_LADDER, initial=PointMass(0.0), obs=None,
                init: str = "auto") -> Ladder:
    """One chain per inverse temperature; rung ``k`` uses stream ``rng.spawn(k + 1)``."""
    models = [tempered_sine_model(c, initial=initial) for c in c_values]
    states = [init_state(m, T, rng.spawn(rng.stream_id * 1000 + k + 1), obs, method=init)
              for k, m in enumerate(models)]
    return Ladder(tuple(float(c) for c in c_values), states, models, rng)


def swap_step(ladder: Ladder, rng=None) -> tuple[Ladder, bool]:
    """Propose exchanging the skeletons of one uniformly chosen adjacent pair."""
    rng = rng if rng is not None else ladder.rng
    K = len(ladder.states)
    if K < 2:
        raise InvalidArgument("swap needs at least two rungs")
    i = int(rng.gen.integers(K - 1))
    j = i + 1
    si, sj = ladder.states[i].skeleton, ladder.states[j].skeleton
    mi, mj = ladder.models[i], ladder.models[j]
    log_r = (log_skeleton_density(sj, ladder.c_values[i], mi)
             + log_skeleton_density(si, ladder.c_values[j], mj)
             - log_skeleton_density(si, ladder.c_values[i], mi)
             - log_skeleton_density(sj, ladder.c_values[j], mj))
    ladder.swaps_proposed[i] += 1
    if math.isnan(log_r):
        return ladder, False
    if log_r >= 0 or math.log(rng.gen.random()) < log_r:
        ladder.states[i].skeleton, ladder.states[j].skeleton = sj, si
        ladder.swaps_accepted[i] += 1
        return ladder, True
    return ladder, False


def tempered_sweep(ladder: Ladder, obs, cfg: GibbsConfig, trace=None) -> Ladder:
    """A Gibbs sweep on every rung followed by one swap proposal.

    ``trace`` (if given) receives the record of the ``c = 1`` chain taken
    after the swap.
    """
    for st, m in zip(ladder.states, ladder.models):
        gibbs_sweep(st, m, obs, cfg)
    if len(ladder.states) > 1:
        swap_step(ladder)
    top = ladder.top
    top.last["monitors"] = top.skeleton.values_at(cfg.monitors(top.skeleton.T), top.rng)
    top.last["n_psi"] = top.skeleton.psi.size
    if trace is not None:
        trace.append(top.last)
    return ladder


def run_tempered(ladder: Ladder, obs, cfg: GibbsConfig, n_sweeps: int, trace=None) -> np.ndarray:
    out = np.empty((n_sweeps, cfg.monitors(ladder.top.skeleton.T).size))
    for k in range(n_sweeps):
        tempered_sweep(ladder, obs, cfg, trace)
        out[k] = ladder.top.last["monitors"]
    return out
