"""Metropolis-Hastings update of the drift parameter given the skeleton.

Relative to a unit-rate Poisson reference on ``[0, T]`` and Wiener measure,
the joint density of ``(Psi, X)`` under parameter ``theta`` is proportional to

    exp(A(X_T) - A(X_0) - (M + L) T) * prod_{g in Psi} (M - phi(X_g)),

so the conditional of ``theta`` needs no re-thinning of ``Psi``.  Terms that
do not involve ``theta`` (the initial density, Brownian increments and the
Gaussian likelihood) cancel in the acceptance ratio and are left out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .models import PointMass


@dataclass(frozen=True)
class ThetaProposal:
    kind: str = "prior"
    rw_scale: float = 0.2

    def __post_init__(self):
        if self.kind not in ("prior", "random_walk"):
            raise InvalidArgument(f"unknown theta proposal {self.kind!r}")
        if self.kind == "random_walk" and not self.rw_scale > 0:
            raise InvalidArgument("rw_scale must be positive")


def log_theta_posterior(theta: float, skeleton, model, obs=None) -> float:
    """Unnormalised log posterior of ``theta`` given ``(Psi, X)``.

    ``model`` is any member of the family; it is re-bound to ``theta``.
    Returns ``-inf`` outside the prior support or when some Poisson time has
    ``phi >= M``.  ``obs`` is accepted for symmetry with the other updates;
    the Gaussian likelihood does not depend on ``theta``.
    """
    prior = model.theta_prior
    lp = prior.logpdf(theta) if prior is not None else 0.0
    if not math.isfinite(lp):
        return -math.inf
    try:
        m = model.with_theta(theta)
    except InvalidArgument:
        return -math.inf
    out = lp + m.A(skeleton.xT) - m.A(skeleton.x0) - (m.M + m.L) * skeleton.T
    if skeleton.psi.size:
        gap = m.M - m.phi(skeleton.x_psi)
        if np.any(gap <= 0):
            return -math.inf
        out += float(np.sum(np.log(gap)))
    return float(out)


def propose_theta(theta: float, model, proposal: ThetaProposal, rng):
    """Draw ``theta*`` and return it with ``log q(theta | theta*) - log q(theta* | theta)``."""
    prior = model.theta_prior
    if proposal.kind == "prior":
        new = float(prior.sample(rng))
        # independence proposal from the prior
        return new, prior.logpdf(theta) - prior.logpdf(new)
    return float(theta + proposal.rw_scale * rng.gen.standard_normal()), 0.0


def theta_step(state, model, obs, proposal: ThetaProposal, rng=None):
    """One MH update of ``state.theta``; returns ``(state, accepted)``.

    With a point-mass prior the parameter is left unchanged and the step
    counts as rejected.
    """
    rng = rng if rng is not None else state.rng
    if isinstance(model.theta_prior, PointMass):
        return state, False
    cur = state.theta
    new, log_q = propose_theta(cur, model, proposal, rng)
    lp_new = log_theta_posterior(new, state.skeleton, model, obs)
    if lp_new == -math.inf:
        return state, False
    log_ratio = lp_new - log_theta_posterior(cur, state.skeleton, model, obs) + log_q
    if math.log(rng.gen.random()) < log_ratio:
        state.theta = new
        return state, True
    return state, False
