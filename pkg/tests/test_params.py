"""Metropolis-Hastings update of the drift parameter."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from exactsde.errors import InvalidArgument
from exactsde.gibbs import ChainState
from exactsde.models import (
    Exponential,
    Flat,
    PointMass,
    constant_phi_model,
    hyperbolic_model,
)
from exactsde.params import ThetaProposal, log_theta_posterior, propose_theta, theta_step
from exactsde.skeleton import Skeleton
from exactsde.stochastic import RngStream


def flat_skeleton(T, x0=0.0, xT=0.0):
    return Skeleton(T, [], [], [0.0, T], [x0, xT])


class TestLogPosterior:
    def test_hyperbolic_decay_term(self):
        # M + L = theta^2 / 2, so with A(0) = 0 and no Poisson points only that term remains
        T = 3.0
        m = hyperbolic_model(1.0, theta_prior=Flat(0.0, math.inf))
        for th in (0.5, 1.0, 2.0):
            mt = m.with_theta(th)
            assert mt.M + mt.L == pytest.approx(th * th / 2)
            assert log_theta_posterior(th, flat_skeleton(T), m) == pytest.approx(-th * th * T / 2)

    def test_constant_phi_linear_in_theta(self):
        m = constant_phi_model(0.2, 1.0, theta_prior=Flat(0.2, math.inf))
        sk = flat_skeleton(4.0)
        lp = [log_theta_posterior(th, sk, m) for th in (0.5, 1.0, 1.5)]
        assert lp[0] - lp[1] == pytest.approx(0.5 * 4.0)
        assert lp[1] - lp[2] == pytest.approx(0.5 * 4.0)

    def test_poisson_factor(self):
        m = hyperbolic_model(1.0, theta_prior=Flat(0.0, math.inf))
        sk = Skeleton(2.0, [0.7, 1.1], [0.4, -1.3], [0.0, 2.0], [0.2, 0.9])
        th = 1.7
        mt = m.with_theta(th)
        expected = (mt.A(0.9) - mt.A(0.2) - (mt.M + mt.L) * 2.0
                    + math.log(mt.M - mt.phi(0.4)) + math.log(mt.M - mt.phi(-1.3)))
        assert log_theta_posterior(th, sk, m) == pytest.approx(expected)

    def test_outside_support(self):
        m = hyperbolic_model(1.0)
        assert log_theta_posterior(-1.0, flat_skeleton(1.0), m) == -math.inf


class TestProposals:
    def test_random_walk_is_symmetric(self):
        m = hyperbolic_model(1.0)
        new, log_q = propose_theta(1.0, m, ThetaProposal("random_walk", 0.3), RngStream(0))
        assert log_q == 0.0 and new != 1.0

    def test_prior_proposal_correction(self):
        m = hyperbolic_model(1.0, theta_prior=Exponential(2.0))
        new, log_q = propose_theta(1.0, m, ThetaProposal("prior"), RngStream(1))
        assert log_q == pytest.approx(-2.0 * 1.0 + 2.0 * new)

    def test_invalid_kind(self):
        with pytest.raises(InvalidArgument):
            ThetaProposal("gibbs")


class TestThetaStep:
    def test_point_mass_prior_never_moves(self):
        m = hyperbolic_model(1.0, theta_prior=PointMass(1.0))
        st = ChainState(flat_skeleton(2.0), 1.0, RngStream(2))
        for _ in range(100):
            st, acc = theta_step(st, m, None, ThetaProposal("random_walk"))
            assert not acc and st.theta == 1.0

    def test_identity_move_ratio_is_one(self):
        m = hyperbolic_model(1.0)
        sk = Skeleton(2.0, [0.5], [0.3], [0.0, 2.0], [0.0, 1.0])
        a = log_theta_posterior(1.3, sk, m)
        assert a - log_theta_posterior(1.3, sk, m) == 0.0

    def test_prior_proposal_acceptance_rate(self):
        # empty Poisson set, X_0 = X_T = 0: acceptance is min(1, exp(-(th*^2 - th^2) T / 2))
        T = 2.0
        m = hyperbolic_model(1.0, theta_prior=Exponential(1.0))
        n = 20000
        acc = 0
        for k in range(n):
            st = ChainState(flat_skeleton(T), 1.0, RngStream(3, k))
            _, a = theta_step(st, m, None, ThetaProposal("prior"))
            acc += a
        expected = quad(lambda t: math.exp(-t) * min(1.0, math.exp(-(t * t - 1.0) * T / 2)),
                        0, math.inf)[0]
        se = math.sqrt(expected * (1 - expected) / n)
        assert abs(acc / n - expected) < 3 * se

    def test_chain_targets_conditional(self):
        # with an empty Poisson set the conditional is prior * exp(-theta^2 T / 2)
        T = 1.0
        m = hyperbolic_model(1.0, theta_prior=Exponential(1.0))
        st = ChainState(flat_skeleton(T), 1.0, RngStream(4))
        th = np.empty(40000)
        for i in range(th.size):
            st, _ = theta_step(st, m, None, ThetaProposal("random_walk", 0.8))
            th[i] = st.theta
        dens = lambda t: math.exp(-t - t * t * T / 2)
        z = quad(dens, 0, math.inf)[0]
        mean = quad(lambda t: t * dens(t), 0, math.inf)[0] / z
        assert th[2000:].mean() == pytest.approx(mean, abs=0.02)
