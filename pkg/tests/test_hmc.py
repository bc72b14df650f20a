"""HMC path target, gradient and leapfrog integrator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsde.diagnostics import ess
from exactsde.errors import ContractViolation, InvalidArgument
from exactsde.hmc import (
    HmcConfig,
    PathTarget,
    grad_log_target,
    hmc_step,
    leapfrog,
    log_target,
    mass_vector,
)
from exactsde.models import Flat, Normal, constant_phi_model, hyperbolic_model, sine_model
from exactsde.skeleton import ObservationSet
from exactsde.stochastic import RngStream

from oracles import (
    central_difference,
    mp_central_difference,
    random_state,
    ref_log_target,
)


MODELS = [hyperbolic_model(1.0, initial=Normal(0.0, 1.0)), sine_model(0.0, initial=Normal(0.0, 1.0))]


class TestLogTarget:
    @pytest.mark.parametrize("model", MODELS, ids=["hyperbolic", "sine"])
    @pytest.mark.parametrize("with_obs", [False, True])
    def test_differences_match_reference(self, model, with_obs):
        rng = np.random.default_rng(1)
        for _ in range(20):
            target, q1 = random_state(rng, model, with_obs, n_psi=3)
            q2 = q1 + rng.normal(0, 0.3, q1.size)
            y = np.where(target.has_y, target.args[3], np.nan) if with_obs else None
            args = (target.times, target.is_psi, model.name, model.M, y, 0.2)
            expected = ref_log_target(q1, *args) - ref_log_target(q2, *args)
            assert target.log_density(q1) - target.log_density(q2) == pytest.approx(expected, abs=1e-8)

    def test_gaussian_quadratic_form(self):
        # zero drift, no observations, flat initial law: only Brownian increments
        m = constant_phi_model(0.0, 1.0, initial=Flat())
        times = np.array([0.0, 0.7, 1.5, 3.0])
        q = np.array([0.2, -0.4, 1.1, 0.5])
        lp = log_target(q, times, m, None, 3.0)
        assert lp == pytest.approx(-0.5 * np.sum(np.diff(q) ** 2 / np.diff(times)))
        assert log_target(2 * q, times, m, None, 3.0) == pytest.approx(4 * lp)

    def test_phi_above_bound_is_contract_violation(self):
        m = constant_phi_model(0.5, 1.0)
        target = PathTarget([0.0, 1.0, 2.0], [False, True, False], m)
        target.check_bounds(np.zeros(3))
        bad = constant_phi_model(0.5, 1.0)
        object.__setattr__(bad, "M", 0.25)
        with pytest.raises(ContractViolation):
            PathTarget([0.0, 1.0, 2.0], [False, True, False], bad).check_bounds(np.zeros(3))

    def test_times_must_span_horizon(self):
        with pytest.raises(InvalidArgument):
            log_target(np.zeros(3), np.array([0.0, 1.0, 2.0]), hyperbolic_model(1.0), None, 3.0)


class TestGradient:
    @pytest.mark.parametrize("with_obs", [False, True])
    def test_double_precision_differences(self, with_obs):
        rng = np.random.default_rng(2)
        for _ in range(100):
            target, q = random_state(rng, MODELS[0], with_obs)
            g = target.grad(q)
            fd = central_difference(target.log_density, q)
            assert np.all(np.abs(fd - g) < 1e-5 * np.abs(g))

    @pytest.mark.parametrize("model", MODELS, ids=["hyperbolic", "sine"])
    @pytest.mark.parametrize("with_obs", [False, True])
    def test_extended_precision_differences(self, model, with_obs):
        # states with phi/M close to 1 defeat double-precision differences
        rng = np.random.default_rng(2)
        for _ in range(100):
            target, q = random_state(rng, model, with_obs)
            g = target.grad(q)
            fd = mp_central_difference(q, target, model)
            assert np.all(np.abs(fd - g) < 1e-5 * np.abs(g))

    def test_midpoint_of_equal_neighbours(self):
        m = constant_phi_model(0.0, 1.0)
        g = grad_log_target(np.array([0.0, 0.7, 0.7, 0.7]), np.array([0.0, 1.0, 2.0, 3.0]),
                            m, None, 3.0)
        assert g[2] == 0.0

    def test_point_on_bridge_mean_is_stationary(self):
        m = constant_phi_model(0.0, 1.0)
        times = np.array([0.0, 1.0, 1.25, 3.0])
        q = np.array([0.0, 1.0, 1.0 + 0.25 / 2.0 * (2.0 - 1.0), 2.0])
        assert grad_log_target(q, times, m, None, 3.0)[2] == pytest.approx(0.0, abs=1e-12)

    def test_likelihood_term_vanishes_at_observation(self):
        m = constant_phi_model(0.0, 1.0)
        obs = ObservationSet([1.0], [0.4], 0.2)
        times = np.array([0.0, 1.0, 2.0])
        q = np.array([0.0, 0.4, 0.8])
        # the Brownian part at q_1 is balanced, so the gradient is the likelihood term alone
        assert grad_log_target(q, times, m, obs, 2.0)[1] == pytest.approx(0.0, abs=1e-12)
        q[1] = 0.5
        g_noobs = grad_log_target(q, times, m, None, 2.0)[1]
        assert grad_log_target(q, times, m, obs, 2.0)[1] - g_noobs == pytest.approx(-0.1 / 0.04)

    def test_fixed_initial_value_has_zero_gradient(self):
        target = PathTarget([0.0, 1.0, 2.0], [False, True, False], hyperbolic_model(1.0))
        assert target.grad(np.array([0.0, 1.0, 2.0]))[0] == 0.0


class TestLeapfrog:
    @pytest.mark.parametrize("mass", [100.0, "stiffness"])
    def test_reversibility(self, mass):
        rng = np.random.default_rng(3)
        for model in MODELS:
            target, q = random_state(rng, model, True)
            m = mass_vector(target.args[0], 100.0, 1) if mass == "stiffness" else mass
            mom = rng.normal(0, 10, q.size)
            q1, p1 = leapfrog(q, mom, target, 0.2, 5, m)
            q2, p2 = leapfrog(q1, -p1, target, 0.2, 5, m)
            assert np.max(np.abs(q2 - q)) < 1e-10
            assert np.max(np.abs(p2 + mom)) < 1e-8

    def test_volume_preservation(self):
        rng = np.random.default_rng(4)
        m = hyperbolic_model(1.0, initial=Normal(0.0, 1.0))
        target = PathTarget([0.0, 0.8, 2.0], [False, True, False], m)
        z0 = np.concatenate((rng.normal(size=3), rng.normal(0, 3, 3)))
        step = lambda z: np.concatenate(leapfrog(z[:3], z[3:], target, 0.2, 1, 2.0))
        h = 1e-6
        jac = np.column_stack([(step(z0 + h * e) - step(z0 - h * e)) / (2 * h) for e in np.eye(6)])
        assert np.linalg.det(jac) == pytest.approx(1.0, abs=1e-6)

    def test_stiffness_masses(self):
        dt = np.array([0.5, 0.01, 2.0])
        np.testing.assert_allclose(mass_vector(dt, 10.0, 1), [10.0, 102.0, 100.5, 10.0])
        np.testing.assert_array_equal(mass_vector(dt, 10.0, 0), np.full(4, 10.0))


class TestHmcStep:
    def test_tiny_step_always_accepts(self):
        rng = RngStream(5)
        target, q = random_state(np.random.default_rng(5), MODELS[0], True)
        cfg = HmcConfig(step_size=1e-6, n_leapfrog=5)
        assert all(hmc_step(q, target, cfg, rng)[1] for _ in range(1000))

    @pytest.mark.parametrize("mode", ["scalar", "stiffness"])
    def test_gaussian_moments(self, mode):
        # zero drift, X_0 ~ N(0, 1), unit spacing: Var(X_k) = 1 + k
        m = constant_phi_model(0.0, 1.0, initial=Normal(0.0, 1.0))
        times = np.arange(4.0)
        target = PathTarget(times, np.zeros(4, bool), m)
        cfg = HmcConfig(step_size=0.5, n_leapfrog=5, mass=1.0, mass_mode=mode)
        rng = RngStream(6)
        q = np.zeros(4)
        draws = np.empty((10**4, 4))
        for i in range(draws.shape[0]):
            q, _ = hmc_step(q, target, cfg, rng)
            draws[i] = q
        var = 1.0 + times
        for k in range(4):
            n_eff = ess(draws[:, k])
            assert abs(draws[:, k].mean()) < 3 * math.sqrt(var[k] / n_eff)
            # sd of a sample variance of Gaussians is var * sqrt(2 / n)
            assert abs(draws[:, k].var() - var[k]) < 3 * var[k] * math.sqrt(2 / n_eff)

    def test_config_validation(self):
        with pytest.raises(InvalidArgument):
            HmcConfig(step_size=0.0)
        with pytest.raises(InvalidArgument):
            HmcConfig(mass_mode="dense")

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), eps=st.floats(0.01, 0.3), n=st.integers(1, 8))
    def test_rejected_step_keeps_state(self, seed, eps, n):
        rng = RngStream(seed)
        target, q = random_state(np.random.default_rng(seed), MODELS[1], True)
        q_new, acc = hmc_step(q, target, HmcConfig(eps, n, 100.0), rng)
        if not acc:
            np.testing.assert_array_equal(q_new, q)
        assert np.all(np.isfinite(q_new))
