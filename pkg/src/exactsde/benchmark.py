"""Filtering-error benchmark: Gibbs sampler against the random-weight filter.

Both methods estimate moments of the filtering distribution of ``X`` at the
last observation time.  Budgets are wall-clock seconds.  A short pilot run
measures the cost of one Gibbs sweep and of one filter particle; each
budget is then converted into a fixed number of sweeps or particles, so a
run is reproducible given the pilot rates.  The reference moments come from
a large bootstrap filter on a fine Euler grid.
"""

from __future__ import annotations

import math
import os
import time

import numpy as np

from .baselines import bootstrap_pf, random_weight_pf
from .diagnostics import filter_statistics, filtering_error_benchmark, median_error, write_bench_csv
from .gibbs import GibbsConfig, init_state, run_chain
from .hmc import HmcConfig
from .stochastic import RngStream

REFERENCE_STREAM = 11
PILOT_STREAM = 12
GIBBS_STREAM = 13
RWPF_STREAM = 14
_PF_BLOCK = 20000


def reference_statistics(problem, n_particles: int, dt: float, seed: int) -> dict:
    """Filtering moments at the last observation from a large Euler bootstrap filter.

    Particles are run in independent blocks (to bound memory) and pooled
    with the block's likelihood estimate as its weight.
    """
    rng = RngStream(seed, REFERENCE_STREAM)
    obs = problem.obs
    vals, logw = [], []
    left = int(n_particles)
    while left > 0:
        n = min(_PF_BLOCK, left)
        res = bootstrap_pf(problem.model, obs, n, dt, rng, T=float(obs.times[-1]))
        vals.append(res.last_values)
        logw.append(np.log(res.last_weights) + res.log_lik + math.log(n))
        left -= n
    lw = np.concatenate(logw)
    w = np.exp(lw - lw.max())
    return filter_statistics(np.concatenate(vals), w / w.sum())


def _gibbs_method(problem, gcfg, burn_frac=0.1):
    t_last = float(problem.obs.times[-1])
    cfg = GibbsConfig(hmc=gcfg.hmc, flip_move=gcfg.flip_move, monitor_times=(t_last,))

    def run(n_sweeps, seed):
        rng = RngStream(seed, GIBBS_STREAM)
        t0 = time.perf_counter()
        st = init_state(problem.model, problem.T, rng, problem.obs)
        burn = int(burn_frac * n_sweeps)
        x = run_chain(st, problem.model, problem.obs, cfg, burn + n_sweeps, block=256)[burn:, 0]
        wall = time.perf_counter() - t0
        return filter_statistics(x, np.full(x.size, 1.0 / x.size)), wall

    return run


def _rwpf_method(problem):
    t_last = float(problem.obs.times[-1])

    def run(n_particles, seed):
        rng = RngStream(seed, RWPF_STREAM)
        t0 = time.perf_counter()
        res = random_weight_pf(problem.model, problem.obs, n_particles, rng, T=t_last)
        wall = time.perf_counter() - t0
        return filter_statistics(res.last_values, res.last_weights), wall

    return run


def _rate(run, units, seed):
    """Units per second measured on a warm pilot run."""
    run(max(1, units // 10), seed)
    _, wall = run(units, seed)
    return units / max(wall, 1e-9)


def filtering_benchmark(problem, cfg: dict, out_dir=None, gibbs_cfg=None) -> dict:
    """Run both methods over ``cfg['bench']`` budgets and seeds.

    Writes ``bench.csv`` (when ``out_dir`` is given) and returns a summary
    with the reference moments, per-budget unit counts, the median absolute
    error of each moment and the number of budgets at which the Gibbs
    sampler's median variance error is at most the filter's.
    """
    t_start = time.perf_counter()
    bench = cfg["bench"]
    seed = int(cfg["seed"])
    budgets = [float(b) for b in bench["budgets_s"]]
    seeds = [seed * 1000 + k for k in range(int(bench["n_seeds"]))]
    if gibbs_cfg is None:
        h = cfg["hmc"]
        gibbs_cfg = GibbsConfig(hmc=HmcConfig(h["step_size"], h["n_leapfrog"], h["mass"], h["mass_mode"]),
                                flip_move=bool(cfg["mcmc"]["flip_move"]))
    ref = reference_statistics(problem, int(bench["reference_particles"]), cfg["euler"]["dt"], seed)
    gibbs = _gibbs_method(problem, gibbs_cfg)
    rwpf = _rwpf_method(problem)
    rates = {"gibbs": _rate(gibbs, 2000, seed + PILOT_STREAM),
             "rwpf": _rate(rwpf, 20000, seed + PILOT_STREAM)}
    units = {name: {b: max(10, int(round(b * r))) for b in budgets} for name, r in rates.items()}

    def by_budget(name, run):
        return lambda budget, s: run(units[name][budget], s)

    rows = []
    rows += filtering_error_benchmark(by_budget("gibbs", gibbs), budgets, ref, seeds,
                                      "gibbs", setting="hyperbolic")
    rows += filtering_error_benchmark(by_budget("rwpf", rwpf), budgets, ref, seeds,
                                      "rwpf", setting="hyperbolic")
    if out_dir is not None:
        write_bench_csv(os.path.join(out_dir, "bench.csv"), rows)
    med = {m: {str(b): {metric: median_error(rows, m, b, metric)
                        for metric in ("mean", "variance", "exp_mean")}
                    for b in budgets}
           for m in ("gibbs", "rwpf")}
    wins = sum(med["gibbs"][str(b)]["variance"] <= med["rwpf"][str(b)]["variance"] for b in budgets)
    return {"reference": ref, "rates_per_s": rates,
            "units": {k: {str(b): n for b, n in v.items()} for k, v in units.items()},
            "median_abs_error": med, "gibbs_wins_variance": int(wins),
            "n_budgets": len(budgets), "total_wall_s": time.perf_counter() - t_start}
