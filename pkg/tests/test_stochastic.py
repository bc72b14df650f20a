"""Random primitives: stream reproducibility, Poisson processes and thinning."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsde.errors import ContractViolation, InvalidArgument
from exactsde.stochastic import (
    RngStream,
    sample_exponential,
    sample_gaussian,
    sample_poisson_process,
    sample_uniform,
    thin,
)


def assert_within_se(sample, mean, sd, k=3.0):
    se = sd / np.sqrt(np.size(sample))
    assert abs(np.mean(sample) - mean) < k * se, (np.mean(sample), mean, se)


class TestRngStream:
    def test_same_seed_and_stream_reproduce(self):
        a = RngStream(7, 3).gen.standard_normal(50)
        b = RngStream(7, 3).gen.standard_normal(50)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ_and_are_uncorrelated(self):
        a = RngStream(7, 1).gen.standard_normal(20000)
        b = RngStream(7, 2).gen.standard_normal(20000)
        assert not np.array_equal(a, b)
        # correlation of independent series has sd 1/sqrt(n)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(a.size)

    def test_spawn_matches_direct_construction(self):
        np.testing.assert_array_equal(RngStream(5, 0).spawn(9).gen.random(10),
                                      RngStream(5, 9).gen.random(10))

    def test_state_round_trip_continues_the_stream(self):
        rng = RngStream(11, 4)
        rng.gen.random(17)
        saved = rng.get_state()
        expected = rng.gen.random(5)
        np.testing.assert_array_equal(RngStream.from_state(saved).gen.random(5), expected)

    def test_negative_seed_rejected(self):
        with pytest.raises(InvalidArgument):
            RngStream(-1)


class TestScalarSamplers:
    def test_gaussian_mean(self):
        x = sample_gaussian(3.0, 1.0, RngStream(1), size=10**5)
        assert_within_se(x, 3.0, 1.0)

    def test_uniform_mean(self):
        x = sample_uniform(0.0, 1.0, RngStream(2), size=10**5)
        assert_within_se(x, 0.5, 1 / np.sqrt(12))

    def test_exponential_mean(self):
        x = sample_exponential(2.0, RngStream(3), size=10**5)
        assert_within_se(x, 0.5, 0.5)

    @pytest.mark.parametrize("call", [
        lambda r: sample_gaussian(0.0, 0.0, r),
        lambda r: sample_uniform(1.0, 1.0, r),
        lambda r: sample_exponential(0.0, r),
    ])
    def test_invalid_parameters(self, call):
        with pytest.raises(InvalidArgument):
            call(RngStream(0))


class TestPoissonProcess:
    def test_zero_rate_is_empty(self):
        assert sample_poisson_process(0.0, (0.0, 10.0), RngStream(0)).size == 0

    def test_empty_interval_rejected(self):
        with pytest.raises(InvalidArgument):
            sample_poisson_process(1.0, (3.0, 3.0), RngStream(0))

    def test_mean_count(self):
        rng = RngStream(4)
        counts = np.array([sample_poisson_process(2.0, (0.0, 5.0), rng).size for _ in range(10**5)])
        assert_within_se(counts, 10.0, np.sqrt(10.0))

    def test_points_uniform_given_count(self):
        rng = RngStream(5)
        pts = np.concatenate([sample_poisson_process(3.0, (2.0, 6.0), rng) for _ in range(3000)])
        # uniform on (2, 6): mean 4, sd 4/sqrt(12)
        assert_within_se(pts, 4.0, 4 / np.sqrt(12))

    @settings(max_examples=40, deadline=None)
    @given(rate=st.floats(0.0, 20.0), t0=st.floats(-5.0, 5.0), length=st.floats(1e-3, 10.0),
           seed=st.integers(0, 2**32))
    def test_sorted_and_strictly_inside(self, rate, t0, length, seed):
        t1 = t0 + length
        pts = sample_poisson_process(rate, (t0, t1), RngStream(seed))
        assert np.all(np.diff(pts) >= 0)
        assert np.all((pts > t0) & (pts < t1))


class TestThin:
    def test_keep_all_is_identity(self):
        pts = np.sort(RngStream(6).gen.uniform(0, 10, 30))
        np.testing.assert_array_equal(thin(pts, 1.0, RngStream(7)), pts)

    def test_keep_none_is_empty(self):
        pts = np.sort(RngStream(6).gen.uniform(0, 10, 30))
        assert thin(pts, 0.0, RngStream(7)).size == 0

    def test_thinning_theorem_mean(self):
        rng = RngStream(8)
        counts = np.array([thin(sample_poisson_process(2.0, (0.0, 10.0), rng), 0.25, rng).size
                           for _ in range(10**5)])
        # survivors form PP(0.5) on an interval of length 10
        assert_within_se(counts, 5.0, np.sqrt(5.0))

    def test_callable_probability(self):
        pts = np.linspace(0.1, 9.9, 50)
        kept = thin(pts, lambda t: (t < 5).astype(float), RngStream(9))
        np.testing.assert_array_equal(kept, pts[pts < 5])

    def test_probability_outside_unit_interval(self):
        with pytest.raises(ContractViolation):
            thin(np.array([1.0, 2.0]), 1.5, RngStream(0))
