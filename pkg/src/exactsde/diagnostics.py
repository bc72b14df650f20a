"""MCMC diagnostics, two-sample KS testing and trace persistence."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import kstwobign

from .errors import InvalidArgument
from .skeleton import Skeleton


def autocorrelation(x, max_lag: int | None = None) -> np.ndarray:
    """Empirical autocorrelations ``rho_0 .. rho_max_lag`` via FFT (biased normalisation)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag is None:
        max_lag = n - 1
    xc = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / n
    if acov[0] == 0:
        return np.full(max_lag + 1, np.nan)
    return acov / acov[0]


@dataclass
class EssResult:
    ess: float
    zero_variance: bool = False

    def __float__(self):
        return float(self.ess)


def ess_details(series) -> EssResult:
    """ESS with Geyer's initial monotone positive sequence truncation."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise InvalidArgument("ESS needs at least 10 values")
    if np.ptp(x) == 0:
        return EssResult(float(n), True)
    rho = autocorrelation(x)
    # pair sums Gamma_k = rho_2k + rho_2k+1, truncated at the first non-positive
    n_pairs = (n - 1) // 2
    gam = rho[0:2 * n_pairs:2] + rho[1:2 * n_pairs:2]
    bad = np.nonzero(gam <= 0)[0]
    m = bad[0] if bad.size else gam.size
    gam = np.minimum.accumulate(gam[:m])
    tau = -1.0 + 2.0 * gam.sum() if m else 1.0
    # tau >= 1/n keeps the estimate finite for anticorrelated chains
    tau = max(tau, 1.0 / n)
    return EssResult(n / tau)


def ess(series) -> float:
    """Effective sample size ``n / tau`` (constant series give ``n``)."""
    return ess_details(series).ess


def thin_to_ess(x, target: int | None = None):
    """Thin ``x`` so consecutive kept values are roughly independent.

    The stride is ``ceil(n / ESS)``; with ``target`` the last ``target``
    strided values are returned.
    """
    x = np.asarray(x, dtype=float)
    stride = max(1, math.ceil(x.size / ess(x)))
    out = x[::-1][::stride][::-1]
    return out if target is None else out[-target:]


@dataclass
class KsResult:
    statistic: float
    p_value: float

    def __iter__(self):
        return iter((self.statistic, self.p_value))


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    The statistic is the sup distance between empirical CDFs; the p-value
    is the Kolmogorov tail at ``sqrt(n m / (n + m)) * D``.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n, m = a.size, b.size
    if n < 20 or m < 20:
        raise InvalidArgument("KS test needs at least 20 values per sample")
    pooled = np.concatenate((a, b))
    fa = np.searchsorted(a, pooled, side="right") / n
    fb = np.searchsorted(b, pooled, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(n * m / (n + m))
    p = 1.0 if d == 0 else float(kstwobign.sf(en * d))
    return KsResult(d, min(1.0, p))


# ---------------------------------------------------------------------------
# Traces


TRACE_COLUMNS = ("iter", "x_mid", "n_psi", "theta", "hmc_accept", "flip_accept",
                 "theta_accept", "wall_clock_s")


@dataclass
class Trace:
    """Per-sweep records.  ``monitors`` holds every monitored value; the CSV
    carries the first one as ``x_mid`` and the others go to a side file."""

    monitor_times: tuple = ()
    record_timing: bool = True
    rows: list = field(default_factory=list)
    monitors: list = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def append(self, rec: dict):
        mon = np.atleast_1d(np.asarray(rec["monitors"], dtype=float))
        wall = time.perf_counter() - self._t0 if self.record_timing else 0.0
        self.rows.append((len(self.rows), float(mon[0]), int(rec["n_psi"]), float(rec["theta"]),
                          int(rec["hmc_accept"]), int(rec["flip_accept"]),
                          int(rec["theta_accept"]), wall))
        self.monitors.append(mon.tolist())

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        j = TRACE_COLUMNS.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def monitor_array(self) -> np.ndarray:
        return np.asarray(self.monitors, dtype=float)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rows:
            w.writerow([r[0], repr(r[1]), r[2], repr(r[3]), r[4], r[5], r[6], repr(r[7])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text) -> Trace:
        text = path_or_text
        if "\n" not in str(path_or_text):
            with open(path_or_text) as fh:
                text = fh.read()
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise InvalidArgument(f"unexpected trace header {header}")
        tr = cls()
        for row in reader:
            tr.rows.append((int(row[0]), float(row[1]), int(row[2]), float(row[3]),
                            int(row[4]), int(row[5]), int(row[6]), float(row[7])))
            tr.monitors.append([float(row[1])])
        return tr

    def monitors_to_csv(self, path, times):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter"] + [f"x@{float(t)!r}" for t in times])
            for i, mon in enumerate(self.monitors):
                w.writerow([i] + [repr(v) for v in mon])


def skeleton_record(it: int, skeleton: Skeleton, theta: float) -> dict:
    d = skeleton.to_dict()
    return {"iter": it, "psi": d["psi"], "x_psi": d["x_psi"], "obs_times": d["obs_times"],
            "x_obs": d["x_obs"], "theta": theta}


def write_skeleton_jsonl(fh, it: int, skeleton: Skeleton, theta: float):
    fh.write(json.dumps(skeleton_record(it, skeleton, theta)) + "\n")


def read_skeleton_jsonl(path, T: float):
    """Return a list of ``(iter, Skeleton, theta)`` from a snapshot file."""
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                skel = Skeleton(T, d["psi"], d["x_psi"], d["obs_times"], d["x_obs"])
                out.append((d["iter"], skel, d["theta"]))
    return out


# ---------------------------------------------------------------------------
# Filtering-error benchmark


BENCH_COLUMNS = ("method", "setting", "budget", "wall_clock_s", "metric", "value")


def filter_statistics(samples, weights=None) -> dict:
    """Posterior mean, variance and ``E[exp(X)]`` from (weighted) samples."""
    x = np.asarray(samples, dtype=float)
    w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, float) / np.sum(weights)
    mean = float(np.sum(w * x))
    return {"mean": mean, "variance": float(np.sum(w * (x - mean) ** 2)),
            "exp_mean": float(np.sum(w * np.exp(x)))}


def filtering_error_benchmark(method, budgets, reference: dict, seeds, name=None,
                              setting: str = ""):
    """Run ``method(budget, seed) -> (stats, wall_clock_s)`` over a budget schedule.

    Returns rows ``(method, setting, budget, wall_clock_s, metric, value)``
    where ``value`` is ``|estimate - reference|`` and one row is produced per
    budget, seed and statistic.
    """
    name = name or getattr(method, "__name__", str(method))
    rows = []
    for budget in budgets:
        for seed in seeds:
            stats, wall = method(budget, seed)
            for key, ref in reference.items():
                rows.append((name, setting, budget, wall, key, abs(stats[key] - ref)))
    return rows


def write_bench_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for r in rows:
            w.writerow(r)


def median_error(rows, method, budget, metric="variance") -> float:
    """Median over seeds of the absolute error of ``metric`` for one method and budget."""
    vals = [r[5] for r in rows if r[0] == method and r[2] == budget and r[4] == metric]
    return float(np.median(vals))
