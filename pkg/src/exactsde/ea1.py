"""Exact prior simulation of EA1 diffusions by retrospective rejection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bridge import impute, sample_h_endpoint
from .errors import BudgetExceeded, ContractViolation, InvalidArgument
from .skeleton import Skeleton
from .stochastic import sample_poisson_process


@dataclass
class Ea1Result:
    skeleton: Skeleton
    grid_values: np.ndarray | None
    attempts: int


def ea1_simulate(model, T: float, rng, grid=None, x0: float | None = None,
                 max_attempts: int = 10**6, stats: dict | None = None) -> Ea1Result:
    """Draw one exact skeleton of ``model`` on ``[0, T]``.

    Each attempt proposes a rate-M Poisson set, ``X_0 ~ pi`` (or the given
    ``x0``), ``X_T`` from the h-biased endpoint law and the bridge values on the
    Poisson set; it is accepted when every uniform exceeds ``phi(X_t)/M``.
    The optional ``grid`` (sorted times in ``[0, T]``) is imputed only after
    acceptance.
    """
    if not T > 0:
        raise InvalidArgument("T must be positive")
    M = model.M
    gen = rng.gen
    for attempt in range(1, max_attempts + 1):
        psi = sample_poisson_process(M, (0.0, T), rng)
        a = model.initial.sample(rng) if x0 is None else x0
        b = sample_h_endpoint(model, a, T, rng, stats)
        x_psi = impute(np.array([0.0, T]), np.array([a, b]), psi, gen.standard_normal(psi.size))
        if psi.size:
            ratio = model.phi(x_psi) / M
            if np.any((ratio < 0) | (ratio > 1)):
                raise ContractViolation("phi/M outside [0, 1]; the model bound M is wrong")
            if not np.all(gen.random(psi.size) > ratio):
                continue
        skel = Skeleton(T, psi, x_psi, np.array([0.0, T]), np.array([a, b]))
        grid_values = None
        if grid is not None:
            grid_values = skel.values_at(grid, rng)
        return Ea1Result(skel, grid_values, attempt)
    raise BudgetExceeded(f"EA1 did not accept within {max_attempts} attempts")


def simulate_path(model, T: float, grid, rng, segment: float = 1.0, x0=None,
                  max_attempts: int = 10**6) -> np.ndarray:
    """Exact values of the diffusion on ``grid`` over a long horizon.

    Runs EA1 segment by segment, each segment started at the previous end
    value; this is exact by the Markov property and keeps acceptance rates
    bounded for large ``T``.
    """
    grid = np.asarray(grid, dtype=float)
    n_seg = max(1, math.ceil(T / segment - 1e-12))
    edges = np.linspace(0.0, T, n_seg + 1)
    out = np.empty(grid.size)
    start = model.initial.sample(rng) if x0 is None else x0
    for k in range(n_seg):
        lo, hi = edges[k], edges[k + 1]
        sel = (grid >= lo) & ((grid < hi) if k < n_seg - 1 else (grid <= hi))
        local = np.clip(grid[sel] - lo, 0.0, hi - lo)
        res = ea1_simulate(model, hi - lo, rng, grid=local, x0=start, max_attempts=max_attempts)
        out[sel] = res.grid_values
        start = res.skeleton.xT
    return out
