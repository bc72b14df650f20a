"""Drift families: closed forms checked against quadrature and finite differences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from exactsde.errors import InvalidArgument
from exactsde.models import (
    Exponential,
    Flat,
    Normal,
    PointMass,
    Uniform,
    build_model,
    constant_phi_model,
    hyperbolic_model,
    initial_code,
    sine_model,
    tempered_sine_model,
)

GRID = np.linspace(-12.0, 12.0, 2001)


def all_models():
    return [hyperbolic_model(1.0), hyperbolic_model(2.5), sine_model(0.0), sine_model(0.7),
            tempered_sine_model(0.0), tempered_sine_model(0.5), tempered_sine_model(1.0)]


def fd(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


class TestHyperbolic:
    def test_values_at_zero(self):
        m = hyperbolic_model(1.0)
        assert m.A(0.0) == 0.0
        assert m.phi(0.0) == pytest.approx(0.0, abs=1e-15)

    def test_phi_tends_to_bound(self):
        m = hyperbolic_model(1.0)
        assert m.M == 1.0
        assert m.phi(1e6) == pytest.approx(1.0, abs=1e-9)

    def test_phi_at_ten_matches_definition(self):
        m = hyperbolic_model(1.0)
        a = -10 / math.sqrt(101)
        a1 = -1 / 101 ** 1.5
        assert m.phi(10.0) == pytest.approx(0.5 * (a * a + a1) + 0.5, abs=1e-12)

    def test_bounds_for_other_theta(self):
        th = 3.0
        m = hyperbolic_model(th)
        assert m.L == -th / 2 and m.M == th * th / 2 + th / 2
        assert m.M + m.L == pytest.approx(th * th / 2)

    def test_rejects_nonpositive_theta(self):
        with pytest.raises(InvalidArgument):
            hyperbolic_model(0.0)


class TestSine:
    def test_phi_at_pi(self):
        assert sine_model(0.0).phi(math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_A_at_zero(self):
        assert sine_model(0.0).A(0.0) == 0.0

    def test_bound_attained(self):
        m = sine_model(0.0)
        # sin^2 + cos peaks at cos = 1/2
        assert m.phi(math.acos(0.5)) == pytest.approx(m.M, abs=1e-14)

    def test_symmetric_only_at_zero_shift(self):
        assert sine_model(0.0).is_symmetric()
        assert not sine_model(0.5).is_symmetric()


class TestTemperedSine:
    def test_zero_temperature_is_brownian(self):
        m = tempered_sine_model(0.0)
        np.testing.assert_array_equal(m.alpha(GRID), 0.0)
        np.testing.assert_array_equal(m.A(GRID), 0.0)

    def test_half_temperature_at_zero(self):
        m = tempered_sine_model(0.5)
        assert m.phi(0.0) == pytest.approx(0.5)
        assert m.M == pytest.approx(0.5)

    def test_out_of_range(self):
        with pytest.raises(InvalidArgument):
            tempered_sine_model(1.5)


class TestConstantPhi:
    def test_drift_free(self):
        m = constant_phi_model(0.5, 1.0)
        np.testing.assert_array_equal(m.alpha(GRID), 0.0)
        np.testing.assert_array_equal(m.A(GRID), 0.0)
        np.testing.assert_array_equal(m.phi(GRID), 0.5)

    def test_keep_probability_zero_at_c_equals_M(self):
        m = constant_phi_model(1.0, 1.0)
        np.testing.assert_array_equal(1 - m.phi(GRID) / m.M, 0.0)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            constant_phi_model(2.0, 1.0)


class TestClosedForms:
    @pytest.mark.parametrize("m", all_models(), ids=lambda m: f"{m.name}-{m.theta}")
    def test_phi_within_declared_bounds(self, m):
        f = m.phi(GRID)
        assert f.min() >= -1e-12
        assert f.max() <= m.M + 1e-12

    @pytest.mark.parametrize("m", all_models(), ids=lambda m: f"{m.name}-{m.theta}")
    def test_phi_from_alpha(self, m):
        a = m.alpha(GRID)
        np.testing.assert_allclose(m.phi(GRID), 0.5 * (a * a + fd(m.alpha, GRID)) - m.L,
                                   atol=1e-8)

    @pytest.mark.parametrize("m", all_models(), ids=lambda m: f"{m.name}-{m.theta}")
    def test_derivatives_by_finite_difference(self, m):
        np.testing.assert_allclose(m.alpha_prime(GRID), fd(m.alpha, GRID), atol=1e-8)
        np.testing.assert_allclose(m.alpha_second(GRID), fd(m.alpha_prime, GRID), atol=1e-8)
        np.testing.assert_allclose(m.phi_prime(GRID), fd(m.phi, GRID), atol=1e-8)

    @pytest.mark.parametrize("m", all_models(), ids=lambda m: f"{m.name}-{m.theta}")
    def test_A_is_integral_of_alpha(self, m):
        for u in (-7.3, -1.0, 0.4, 2.2, 9.0):
            assert m.A(u) == pytest.approx(quad(m.alpha, 0.0, u)[0], abs=1e-10)

    @pytest.mark.parametrize("m", all_models(), ids=lambda m: f"{m.name}-{m.theta}")
    def test_sup_A(self, m):
        assert m.A(np.linspace(-40, 40, 400001)).max() <= m.sup_A + 1e-12
        assert m.A(np.linspace(-40, 40, 400001)).max() == pytest.approx(m.sup_A, abs=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(-50, 50), theta=st.floats(0.05, 5.0))
    def test_hyperbolic_phi_bounds_hold_everywhere(self, x, theta):
        m = hyperbolic_model(theta)
        assert -1e-12 <= m.phi(x) <= m.M + 1e-12


class TestModelBinding:
    def test_with_theta_keeps_initial_and_prior(self):
        m = hyperbolic_model(1.0, initial=Normal(0, 2), theta_prior=Exponential(3.0))
        m2 = m.with_theta(2.0)
        assert m2.theta == 2.0 and m2.initial == Normal(0, 2) and m2.theta_prior == Exponential(3.0)
        assert m.with_theta(1.0) is m

    def test_with_initial(self):
        m = sine_model(0.0).with_initial(Normal(0.0, 1.0))
        assert m.initial == Normal(0.0, 1.0) and m.name == "sine"

    def test_build_model_names(self):
        assert build_model("hyperbolic", theta=2.0).M == 3.0
        assert build_model("constant_phi", c=0.2, M=0.7).M == 0.7
        with pytest.raises(InvalidArgument):
            build_model("nope")

    def test_symmetry_requires_symmetric_initial(self):
        assert hyperbolic_model(1.0).is_symmetric()
        assert not hyperbolic_model(1.0, initial=Normal(1.0, 1.0)).is_symmetric()


class TestDistributions:
    def test_normal_logpdf(self):
        from scipy.stats import norm
        assert Normal(1.0, 2.0).logpdf(0.3) == pytest.approx(norm.logpdf(0.3, 1.0, 2.0))

    def test_supports(self):
        assert Exponential(1.0).logpdf(-0.1) == -math.inf
        assert Uniform(-1, 1).logpdf(2) == -math.inf
        assert PointMass(0.5).logpdf(0.5) == 0.0
        assert Flat(0, 1).logpdf(0.5) == 0.0

    def test_flat_cannot_be_sampled(self):
        from exactsde.stochastic import RngStream
        with pytest.raises(InvalidArgument):
            Flat().sample(RngStream(0))

    def test_initial_codes(self):
        assert initial_code(PointMass(2.0))[:2] == (0, 2.0)
        mode, mean, prec = initial_code(Normal(1.0, 0.5))
        assert (mode, mean, prec) == (1, 1.0, 4.0)
        assert initial_code(Flat())[0] == 2
