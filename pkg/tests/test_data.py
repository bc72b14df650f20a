"""Synthetic observations and the stock-price pipeline."""

import numpy as np
import pytest
from scipy.stats import linregress

from exactsde.data import (
    bundled_stock_path,
    generate_synthetic,
    ingest_stock_csv,
    observation_times,
)
from exactsde.errors import IngestionError, InvalidArgument
from exactsde.models import hyperbolic_model, sine_model


def write_prices(path, prices):
    lines = ["date,price"] + [f"2020-01-{i:03d},{float(p)!r}" for i, p in enumerate(prices)]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestSynthetic:
    def test_observation_times(self):
        np.testing.assert_allclose(observation_times(20.0, 20), np.arange(1.0, 21.0))
        with pytest.raises(InvalidArgument):
            observation_times(1.0, 0)

    def test_noise_free_observations_equal_truth(self):
        d = generate_synthetic(hyperbolic_model(1.0), 20.0, 20, 0.0, seed=3)
        np.testing.assert_array_equal(d.values, d.truth_at(d.times))
        assert d.truth_values[0] == 0.0 and d.truth_times[-1] == 20.0

    def test_seed_determinism(self):
        m = sine_model(0.0)
        a = generate_synthetic(m, 10.0, 5, 0.2, seed=1)
        b = generate_synthetic(m, 10.0, 5, 0.2, seed=1)
        c = generate_synthetic(m, 10.0, 5, 0.2, seed=2)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_noise_level(self):
        # residuals across many seeds have standard deviation sigma_y
        m = hyperbolic_model(1.0)
        res = np.concatenate([
            (lambda d: d.values - d.truth_at(d.times))(generate_synthetic(m, 5.0, 50, 0.3, s))
            for s in range(40)])
        assert res.std() == pytest.approx(0.3, rel=0.05)

    def test_truth_lookup_off_grid(self):
        d = generate_synthetic(hyperbolic_model(1.0), 2.0, 2, 0.1, seed=0)
        with pytest.raises(InvalidArgument):
            d.truth_at([0.123456])


class TestStocks:
    def test_bundled_series_split(self):
        s = ingest_stock_csv()
        assert s.prices.size == 179 and s.n_train == 146 and s.n_test == 33
        assert s.times[0] == 0.0 and s.times[-1] == pytest.approx(10.0)
        assert s.observations().times.size == 146 and np.all(np.isfinite(s.values))

    def test_constant_prices_give_zero(self, tmp_path):
        s = ingest_stock_csv(write_prices(tmp_path / "p.csv", [50.0] * 179))
        np.testing.assert_allclose(s.values, 0.0, atol=1e-12)

    def test_recovers_log_deviation_from_linear_trend(self, tmp_path):
        i = np.arange(200)
        dev = 0.05 * np.sin(i / 7.0)
        prices = (100 + 2 * i) * np.exp(dev)
        s = ingest_stock_csv(write_prices(tmp_path / "p.csv", prices))
        fit = linregress(i, prices)
        np.testing.assert_allclose(s.values, np.log(prices / (fit.intercept + fit.slope * i)),
                                   rtol=0, atol=1e-12)
        np.testing.assert_allclose(s.times, 10.0 * i / 199)
        r2 = 1 - np.sum((s.values - dev) ** 2) / np.sum((dev - dev.mean()) ** 2)
        assert r2 > 0.95

    def test_additive_detrending_hits_nonpositive_residuals(self, tmp_path):
        # least-squares residuals sum to zero, so one of them is never positive
        i = np.arange(179)
        path = write_prices(tmp_path / "p.csv", 100 + 2 * i + 5 * np.sin(i))
        with pytest.raises(IngestionError) as exc:
            ingest_stock_csv(path, detrend="additive")
        assert exc.value.row >= 2
        assert ingest_stock_csv(path).detrend == "multiplicative"
        with pytest.raises(InvalidArgument):
            ingest_stock_csv(path, detrend="ratio")

    @pytest.mark.parametrize("bad,row", [("abc", 5), ("-3.0", 5), ("", 5)])
    def test_bad_rows_reported(self, tmp_path, bad, row):
        lines = ["date,price"] + [f"d{i},{100 + i}" for i in range(200)]
        lines[row - 1] = f"dX,{bad}"
        p = tmp_path / "p.csv"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(IngestionError) as exc:
            ingest_stock_csv(p)
        assert exc.value.row == row

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest_stock_csv(write_prices(tmp_path / "p.csv", [1.0 + i for i in range(100)]))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("when,close\n")
        with pytest.raises(IngestionError) as exc:
            ingest_stock_csv(p)
        assert exc.value.row == 1

    def test_bundled_path_exists(self):
        assert bundled_stock_path().is_file()
