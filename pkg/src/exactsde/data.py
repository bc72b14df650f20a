"""Synthetic observation generators and the stock-price pipeline."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .ea1 import simulate_path
from .errors import IngestionError, InvalidArgument
from .skeleton import ObservationSet
from .stochastic import RngStream

BUNDLED_STOCK_CSV = "goog_weekly_stand_in.csv"


@dataclass
class SyntheticData:
    """Noisy observations of one exact prior path, with the truth kept."""

    times: np.ndarray
    values: np.ndarray
    sigma_y: float
    truth_times: np.ndarray
    truth_values: np.ndarray

    def observations(self) -> ObservationSet:
        return ObservationSet(self.times, self.values, self.sigma_y)

    def truth_at(self, times) -> np.ndarray:
        idx = np.searchsorted(self.truth_times, times)
        if np.any(self.truth_times[np.minimum(idx, self.truth_times.size - 1)] != times):
            raise InvalidArgument("requested times are not on the truth grid")
        return self.truth_values[idx]


def observation_times(T: float, n_obs: int) -> np.ndarray:
    """``n_obs`` equally spaced times ``{T/n, 2T/n, ..., T}``."""
    if n_obs < 1:
        raise InvalidArgument("n_obs must be at least 1")
    return T * np.arange(1, n_obs + 1) / n_obs


def generate_synthetic(model, T: float, n_obs: int, sigma_y: float, seed: int,
                       truth_grid=None) -> SyntheticData:
    """Simulate an exact path of ``model`` and observe it with Gaussian noise.

    The truth is recorded on ``truth_grid`` (default: spacing ``T/200``)
    together with the observation times.
    """
    if sigma_y < 0:
        raise InvalidArgument("sigma_y must be non-negative")
    times = observation_times(T, n_obs)
    if truth_grid is None:
        truth_grid = np.linspace(0.0, T, 201)
    grid = np.union1d(np.asarray(truth_grid, dtype=float), times)
    rng = RngStream(seed, 0)
    truth = simulate_path(model, T, grid, rng)
    at_obs = truth[np.searchsorted(grid, times)]
    noise = rng.gen.standard_normal(n_obs)
    return SyntheticData(times, at_obs + sigma_y * noise, float(sigma_y), grid, truth)


# ---------------------------------------------------------------------------
# Stock prices


@dataclass
class StockSeries:
    dates: list
    prices: np.ndarray
    times: np.ndarray
    values: np.ndarray
    n_train: int
    intercept: float
    slope: float
    detrend: str

    @property
    def n_test(self) -> int:
        return self.prices.size - self.n_train

    @property
    def train(self):
        return self.times[: self.n_train], self.values[: self.n_train]

    @property
    def test(self):
        return self.times[self.n_train:], self.values[self.n_train:]

    def observations(self, sigma_y: float = 0.2) -> ObservationSet:
        t, v = self.train
        return ObservationSet(t, v, sigma_y)


def bundled_stock_path():
    return resources.files("exactsde") / "data" / BUNDLED_STOCK_CSV


def ingest_stock_csv(path=None, detrend: str = "multiplicative", n_test: int = 33,
                     min_rows: int = 179, horizon: float = 10.0) -> StockSeries:
    """Read ``date,price`` rows, remove a linear trend and take logs.

    An ordinary least-squares line ``a + b i`` is fitted to price against
    the row index.  ``multiplicative`` gives ``log(price / fit)``;
    ``additive`` gives ``log(price - fit)``.  Times are mapped affinely to
    ``[0, horizon]``; the last ``n_test`` rows are held out.  Error row
    numbers count the header as row 1.
    """
    if detrend not in ("multiplicative", "additive"):
        raise InvalidArgument(f"unknown detrending {detrend!r}")
    if path is None:
        path = bundled_stock_path()
    dates, prices = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if header[:2] != ["date", "price"]:
            raise IngestionError(1, "header must be 'date,price'")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                price = float(row[1])
            except (IndexError, ValueError):
                raise IngestionError(row_no, f"unparseable price {row[1:]!r}") from None
            if not (math.isfinite(price) and price > 0):
                raise IngestionError(row_no, f"price must be positive, got {price}")
            dates.append(row[0].strip())
            prices.append(price)
    n = len(prices)
    if n < min_rows:
        raise IngestionError(n + 1, f"need at least {min_rows} rows, found {n}")
    if not 0 < n_test < n:
        raise InvalidArgument("n_test must leave a non-empty training set")
    prices = np.asarray(prices)
    idx = np.arange(n, dtype=float)
    slope, intercept = np.polyfit(idx, prices, 1)
    fit = intercept + slope * idx
    if detrend == "multiplicative":
        bad = np.nonzero(fit <= 0)[0]
        if bad.size:
            raise IngestionError(int(bad[0]) + 2, "fitted trend is not positive")
        values = np.log(prices / fit)
    else:
        resid = prices - fit
        bad = np.nonzero(resid <= 0)[0]
        if bad.size:
            raise IngestionError(int(bad[0]) + 2, "detrended price is not positive")
        values = np.log(resid)
    times = horizon * idx / (n - 1)
    return StockSeries(dates, prices, times, values, n - n_test, float(intercept), float(slope),
                       detrend)
