"""Experiment orchestration: build models and data from a config, run a
sampler and write traces, snapshots, checkpoints and summaries.

Files written to the output directory:

``trace.csv``        one row per recorded iteration (fixed header)
``monitors.csv``     every monitored time, when more than one is monitored
``skeletons.jsonl``  skeleton snapshots every ``output.snapshot_every`` rows
``checkpoint.json``  chain state and RNG state for ``--resume``
``summary.json``     deterministic summary (ESS, acceptance, quantiles)
``timing.json``      wall-clock figures (not deterministic)
``band.csv``         posterior median and 90% band on a time grid
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import config as config_mod
from .baselines import PfConfig, euler_simulate, pimh_init, pimh_step, run_pf
from .data import generate_synthetic, ingest_stock_csv
from .diagnostics import TRACE_COLUMNS, Trace, ess, filter_statistics, read_skeleton_jsonl, \
    skeleton_record
from .ea1 import ea1_simulate
from .errors import ConfigError, InvalidConfiguration
from .gibbs import ChainState, GibbsConfig, gibbs_sweep, init_state
from .hmc import HmcConfig
from .models import Exponential, Flat, Normal, PointMass, Uniform, build_model
from .params import ThetaProposal
from .skeleton import ObservationSet, Skeleton
from .stochastic import RngStream
from .tempering import make_ladder, tempered_sweep

CHAIN_STREAM = 1
BAND_STREAM = 2 ** 32 - 1


# ---------------------------------------------------------------------------
# Building blocks from the config


def dist_from_cfg(d):
    kind = d["kind"]
    if kind == "point":
        return PointMass(d.get("value", 0.0))
    if kind == "normal":
        return Normal(d.get("mean", 0.0), d.get("sd", 1.0))
    if kind == "uniform":
        return Uniform(d["low"], d["high"])
    if kind == "exponential":
        return Exponential(d.get("rate", 1.0))
    return Flat(d.get("low", -math.inf), d.get("high", math.inf))


def model_from_cfg(cfg, observed: bool):
    """The configured model; the initial law defaults to a point mass at 0
    for prior simulation and to Normal(0, 1) when there are observations."""
    m = cfg["model"]
    if "initial" in m:
        initial = dist_from_cfg(m["initial"])
    else:
        initial = Normal(0.0, 1.0) if observed else PointMass(0.0)
    prior = dist_from_cfg(m["prior"]) if "prior" in m else None
    return build_model(m["name"], theta=m.get("theta"), c=m.get("c"), M=m.get("M"),
                       initial=initial, theta_prior=prior)


@dataclass
class Problem:
    model: object
    obs: ObservationSet | None
    T: float
    truth: object = None
    stock: object = None


def problem_from_cfg(cfg, require_obs: bool = False, stock: bool = False) -> Problem:
    ocfg = cfg["observations"]
    if stock:
        series = ingest_stock_csv(ocfg.get("stock_csv"), detrend=ocfg["detrend"])
        model = model_from_cfg(cfg, True)
        return Problem(model, series.observations(ocfg["sigma_y"]), 10.0, stock=series)
    observed = config_mod.has_observations(cfg)
    if require_obs and not observed:
        raise ConfigError("observations", "this command needs observations")
    if "T" not in cfg:
        raise ConfigError("T", "the time horizon T is required")
    T = float(cfg["T"])
    model = model_from_cfg(cfg, observed)
    if not observed:
        return Problem(model, None, T)
    if "synthetic" in ocfg:
        syn = ocfg["synthetic"]
        gen_model = model.with_theta(syn["theta"]) if "theta" in syn else model
        data = generate_synthetic(gen_model, T, syn["n_obs"], ocfg["sigma_y"],
                                  syn.get("seed", cfg["seed"]))
        return Problem(model, data.observations(), T, truth=data)
    obs = ObservationSet(ocfg["times"], ocfg["values"], ocfg["sigma_y"])
    return Problem(model, obs, T)


def gibbs_config(cfg, infer=None) -> GibbsConfig:
    h = cfg["hmc"]
    p = cfg["params"]
    mon = cfg["monitor"]["times"]
    return GibbsConfig(
        hmc=HmcConfig(h["step_size"], h["n_leapfrog"], h["mass"], h["mass_mode"]),
        flip_move=cfg["mcmc"]["flip_move"],
        infer_theta=p["infer"] if infer is None else infer,
        theta_proposal=ThetaProposal(p["proposal"], p["rw_scale"]),
        monitor_times=None if mon is None else tuple(mon),
    )


# ---------------------------------------------------------------------------
# Runners: a uniform step / checkpoint interface over the samplers


def _skel_state(st: ChainState) -> dict:
    return {"skeleton": st.skeleton.to_dict(), "theta": st.theta, "rng": st.rng.get_state(),
            "counters": dict(st.counters), "last_hmc": st.last_hmc}


def _restore_chain(d) -> ChainState:
    st = ChainState(Skeleton.from_dict(d["skeleton"]), d["theta"], RngStream.from_state(d["rng"]),
                    dict(d["counters"]))
    st.last_hmc = d["last_hmc"]
    return st


class GibbsRunner:
    def __init__(self, problem: Problem, gcfg: GibbsConfig, seed: int, init="auto", thin=1):
        self.p = problem
        self.gcfg = gcfg
        self.thin = thin
        rng = RngStream(seed, CHAIN_STREAM)
        self.state = init_state(problem.model, problem.T, rng, problem.obs, method=init)

    def step(self) -> dict:
        for _ in range(self.thin):
            gibbs_sweep(self.state, self.p.model, self.p.obs, self.gcfg)
        return self.state.last

    @property
    def skeleton(self):
        return self.state.skeleton

    @property
    def theta(self):
        return self.state.theta

    def counters(self):
        return self.state.counters

    def dump(self) -> dict:
        return {"kind": "gibbs", "chain": _skel_state(self.state)}

    def load(self, d):
        self.state = _restore_chain(d["chain"])


class TemperedRunner:
    def __init__(self, problem: Problem, gcfg: GibbsConfig, seed: int, ladder, init="auto", thin=1):
        if problem.model.name not in ("sine", "tempered_sine") or problem.model.theta not in (0.0, 1.0):
            raise InvalidConfiguration("tempering is implemented for the sine model with theta = 0")
        self.p = problem
        self.gcfg = gcfg
        self.thin = thin
        self.ladder = make_ladder(problem.T, RngStream(seed, CHAIN_STREAM), tuple(ladder),
                                  initial=problem.model.initial, obs=problem.obs, init=init)

    def step(self) -> dict:
        for _ in range(self.thin):
            tempered_sweep(self.ladder, self.p.obs, self.gcfg)
        return self.ladder.top.last

    @property
    def skeleton(self):
        return self.ladder.top.skeleton

    @property
    def theta(self):
        return self.ladder.top.theta

    def counters(self):
        c = dict(self.ladder.top.counters)
        c["swaps_proposed"] = self.ladder.swaps_proposed.tolist()
        c["swaps_accepted"] = self.ladder.swaps_accepted.tolist()
        return c

    def dump(self) -> dict:
        lad = self.ladder
        return {"kind": "tempered", "rng": lad.rng.get_state(),
                "chains": [_skel_state(s) for s in lad.states],
                "swaps_proposed": lad.swaps_proposed.tolist(),
                "swaps_accepted": lad.swaps_accepted.tolist()}

    def load(self, d):
        lad = self.ladder
        lad.rng = RngStream.from_state(d["rng"])
        lad.states = [_restore_chain(c) for c in d["chains"]]
        lad.swaps_proposed = np.asarray(d["swaps_proposed"], dtype=int)
        lad.swaps_accepted = np.asarray(d["swaps_accepted"], dtype=int)


class PimhRunner:
    """Particle MCMC over the path (and optionally theta)."""

    def __init__(self, problem: Problem, pf_cfg: PfConfig, seed: int, proposal=None, monitors=None):
        self.p = problem
        self.pf_cfg = pf_cfg
        self.proposal = proposal
        self.rng = RngStream(seed, CHAIN_STREAM)
        self.monitors = np.array([problem.T / 2]) if monitors is None else np.asarray(monitors, float)
        self.state = pimh_init(problem.model, problem.obs, pf_cfg, self.rng, problem.T, self.monitors)
        self.counts = {"sweeps": 0, "theta_accept": 0, "path_accept": 0}
        self.last_acc = False

    def step(self) -> dict:
        m = self.p.model.with_theta(self.state.theta) if self.proposal is None else self.p.model
        self.state, acc = pimh_step(self.state, m, self.p.obs, self.pf_cfg, self.rng,
                                    self.proposal, self.p.T, self.monitors)
        self.counts["sweeps"] += 1
        self.counts["path_accept"] += acc
        self.counts["theta_accept"] += acc and self.proposal is not None
        idx = np.searchsorted(self.state.times, self.monitors)
        return {"monitors": self.state.path[idx], "n_psi": 0, "theta": self.state.theta,
                "hmc_accept": acc, "flip_accept": False,
                "theta_accept": acc and self.proposal is not None}

    skeleton = None

    @property
    def theta(self):
        return self.state.theta

    def counters(self):
        return dict(self.counts)

    def dump(self) -> dict:
        s = self.state
        return {"kind": "pimh", "rng": self.rng.get_state(), "theta": s.theta, "path": s.path.tolist(),
                "log_lik": s.log_lik, "times": s.times.tolist(), "counts": self.counts}

    def load(self, d):
        from .baselines import PimhState
        self.rng = RngStream.from_state(d["rng"])
        self.state = PimhState(d["theta"], np.asarray(d["path"]), d["log_lik"], np.asarray(d["times"]))
        self.counts = dict(d["counts"])


# ---------------------------------------------------------------------------
# Output handling


def _row_text(row) -> str:
    it, x, n, th, a, b, c, w = row
    return f"{it},{float(x)!r},{n},{float(th)!r},{a},{b},{c},{float(w)!r}\n"


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _quantiles(x):
    if len(x) == 0:
        return None
    q = np.quantile(np.asarray(x, float), [0.05, 0.5, 0.95])
    return {"q05": float(q[0]), "q50": float(q[1]), "q95": float(q[2]), "mean": float(np.mean(x))}


def run_mcmc(runner, cfg: dict, out_dir, resume: bool = False, T: float | None = None) -> Trace:
    """Drive ``runner`` for ``mcmc.iters`` recorded iterations with persistence."""
    os.makedirs(out_dir, exist_ok=True)
    iters = cfg["mcmc"]["iters"]
    every = cfg["output"]["snapshot_every"]
    timing = cfg["output"]["timing"]
    paths = {k: os.path.join(out_dir, f) for k, f in
             (("trace", "trace.csv"), ("skel", "skeletons.jsonl"), ("ckpt", "checkpoint.json"),
              ("mon", "monitors.csv"))}
    trace = Trace(record_timing=timing)
    start = 0
    wall_offset = 0.0
    if resume:
        with open(paths["ckpt"]) as fh:
            ck = json.load(fh)
        runner.load(ck["runner"])
        start = ck["iter"]
        old = Trace.from_csv(paths["trace"])
        trace.rows = old.rows[:start]
        trace.monitors = _read_monitors(paths["mon"], old)[:start]
        wall_offset = trace.rows[-1][7] if trace.rows else 0.0
        _truncate_jsonl(paths["skel"], start)
    with open(paths["trace"], "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for r in trace.rows:
            fh.write(_row_text(r))
    mon_times = cfg["monitor"]["times"]
    mon_fh = None
    if mon_times is not None and len(mon_times) > 1:
        with open(paths["mon"], "w") as fh:
            fh.write("iter," + ",".join(f"x@{float(t)!r}" for t in mon_times) + "\n")
            for i, m in enumerate(trace.monitors):
                fh.write(_mon_text(i, m))
        mon_fh = open(paths["mon"], "a")
    skel_fh = open(paths["skel"], "a" if resume else "w")
    trace_fh = open(paths["trace"], "a")
    t0 = time.perf_counter()
    try:
        for i in range(start, iters):
            rec = runner.step()
            wall = wall_offset + time.perf_counter() - t0 if timing else 0.0
            mon = np.atleast_1d(np.asarray(rec["monitors"], dtype=float))
            row = (i, float(mon[0]), int(rec["n_psi"]), float(rec["theta"]), int(rec["hmc_accept"]),
                   int(rec["flip_accept"]), int(rec["theta_accept"]), wall)
            trace.rows.append(row)
            trace.monitors.append(mon.tolist())
            trace_fh.write(_row_text(row))
            if mon_fh is not None:
                mon_fh.write(_mon_text(i, trace.monitors[-1]))
            if (i + 1) % every == 0 or i + 1 == iters:
                if runner.skeleton is not None:
                    skel_fh.write(json.dumps(skeleton_record(i, runner.skeleton, runner.theta)) + "\n")
                trace_fh.flush()
                skel_fh.flush()
                if mon_fh is not None:
                    mon_fh.flush()
                _write_json(paths["ckpt"], {"iter": i + 1, "runner": runner.dump()})
    finally:
        trace_fh.close()
        skel_fh.close()
        if mon_fh is not None:
            mon_fh.close()
    trace.sampling_wall_s = time.perf_counter() - t0 + wall_offset
    return trace


def _mon_text(i, values) -> str:
    return f"{i}," + ",".join(repr(float(v)) for v in values) + "\n"


def _read_monitors(path, trace):
    if not os.path.exists(path):
        return [[r[1]] for r in trace.rows]
    with open(path) as fh:
        next(fh)
        return [[float(v) for v in ln.strip().split(",")[1:]] for ln in fh if ln.strip()]


def _truncate_jsonl(path, n_rows):
    if not os.path.exists(path):
        return
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and json.loads(ln)["iter"] < n_rows]
    with open(path, "w") as fh:
        fh.writelines(lines)


def chain_summary(trace: Trace, cfg: dict, counters: dict) -> dict:
    b = config_mod.burnin(cfg)
    x = trace.column("x_mid")[b:]
    th = trace.column("theta")[b:]
    n = len(trace)
    out = {
        "iters": n,
        "burnin": b,
        "ess_x_mid": float(ess(x)) if x.size >= 10 else None,
        "x_mid": _quantiles(x),
        "mean_n_psi": float(np.mean(trace.column("n_psi")[b:])) if n > b else None,
        "acceptance": {
            "hmc": float(np.mean(trace.column("hmc_accept"))) if n else None,
            "flip": (counters.get("flip_accept", 0) / counters["flip_proposed"]
                     if counters.get("flip_proposed") else None),
            "theta": (counters.get("theta_accept", 0) / counters["theta_proposed"]
                      if counters.get("theta_proposed") else None),
        },
        "counters": counters,
    }
    if np.ptp(th) > 0:
        out["theta"] = _quantiles(th)
        out["ess_theta"] = float(ess(th)) if th.size >= 10 else None
        out["theta_mass_above_1"] = float(np.mean(th > 1.0))
    return out


def posterior_band(out_dir, T: float, cfg: dict, extra_times=()):
    """Median and 90% band of the path on a grid, from the post-burn-in snapshots."""
    snaps = read_skeleton_jsonl(os.path.join(out_dir, "skeletons.jsonl"), T)
    b = config_mod.burnin(cfg)
    snaps = [s for s in snaps if s[0] >= b]
    grid = np.union1d(np.linspace(0.0, T, cfg["output"]["band_points"]),
                      np.asarray(extra_times, dtype=float))
    rng = RngStream(cfg["seed"], BAND_STREAM)
    draws = np.array([sk.values_at(grid, rng) for _, sk, _ in snaps])
    q = np.quantile(draws, [0.05, 0.5, 0.95], axis=0)
    with open(os.path.join(out_dir, "band.csv"), "w") as fh:
        fh.write("time,median,q05,q95\n")
        for t, lo, med, hi in zip(grid, q[0], q[1], q[2]):
            fh.write(f"{float(t)!r},{float(med)!r},{float(lo)!r},{float(hi)!r}\n")
    return grid, q


def _finish(out_dir, summary, trace, extra_timing=None):
    summary.pop("_band", None)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    wall = getattr(trace, "sampling_wall_s", None)
    timing = {"sampling_wall_s": wall}
    if wall and summary.get("ess_x_mid"):
        timing["ess_per_s_x_mid"] = summary["ess_x_mid"] / wall
    timing.update(extra_timing or {})
    _write_json(os.path.join(out_dir, "timing.json"), timing)
    return summary


def _band_coverage(grid, q, times, values):
    idx = np.searchsorted(grid, times)
    inside = (values >= q[0][idx]) & (values <= q[2][idx])
    return float(np.mean(inside))


def _mcmc_runner(problem, cfg, infer=None):
    gcfg = gibbs_config(cfg, infer)
    seed = cfg["seed"]
    thin = cfg["mcmc"]["thin"]
    init = cfg["mcmc"]["init"]
    if cfg["tempering"]["enabled"]:
        return TemperedRunner(problem, gcfg, seed, cfg["tempering"]["ladder"], init, thin)
    return GibbsRunner(problem, gcfg, seed, init, thin)


def _gibbs_experiment(command, cfg, out_dir, resume, problem, infer=None, extra_times=()):
    runner = _mcmc_runner(problem, cfg, infer)
    trace = run_mcmc(runner, cfg, out_dir, resume)
    summary = {"command": command, "model": problem.model.name, "T": problem.T,
               "seed": cfg["seed"], **chain_summary(trace, cfg, runner.counters())}
    extra = np.asarray(extra_times, dtype=float)
    if problem.obs is not None:
        extra = np.union1d(extra, problem.obs.times)
    if problem.truth is not None:
        extra = np.union1d(extra, problem.truth.truth_times)
    grid, q = posterior_band(out_dir, problem.T, cfg, extra)
    if problem.truth is not None:
        tt = problem.truth.truth_times
        summary["truth_band_coverage"] = _band_coverage(grid, q, tt, problem.truth.truth_values)
    if problem.obs is not None:
        summary["obs_band_coverage"] = _band_coverage(grid, q, problem.obs.times, problem.obs.values)
    summary["_band"] = (grid, q)
    return summary, trace


def run_prior(cfg, out_dir, method="gibbs", resume=False):
    problem = problem_from_cfg(cfg)
    if problem.obs is not None:
        raise ConfigError("observations", "prior simulation takes no observations")
    if method == "gibbs":
        summary, trace = _gibbs_experiment("prior", cfg, out_dir, resume, problem)
        summary["method"] = "gibbs"
        return _finish(out_dir, summary, trace)
    os.makedirs(out_dir, exist_ok=True)
    n = cfg["mcmc"]["iters"]
    rng = RngStream(cfg["seed"], CHAIN_STREAM)
    T = problem.T
    mon = np.asarray(cfg["monitor"]["times"] or [T / 2], dtype=float)
    t0 = time.perf_counter()
    trace = Trace(record_timing=cfg["output"]["timing"])
    if method == "ea1":
        stats = {}
        attempts = 0
        with open(os.path.join(out_dir, "skeletons.jsonl"), "w") as fh:
            for i in range(n):
                res = ea1_simulate(problem.model, T, rng, grid=mon,
                                   max_attempts=cfg["mcmc"]["max_attempts"], stats=stats)
                attempts += res.attempts
                trace.append({"monitors": res.grid_values, "n_psi": res.skeleton.psi.size,
                              "theta": problem.model.theta, "hmc_accept": 1, "flip_accept": 0,
                              "theta_accept": 0})
                if (i + 1) % cfg["output"]["snapshot_every"] == 0:
                    fh.write(json.dumps(skeleton_record(i, res.skeleton, problem.model.theta)) + "\n")
        extra = {"acceptance_rate": n / attempts, "mean_attempts": attempts / n,
                 "endpoint_acceptance": stats["accepted"] / stats["proposals"]}
    elif method == "euler":
        _, vals = euler_simulate(problem.model, T, cfg["euler"]["dt"], rng, n_paths=n,
                                 record_times=mon)
        for i in range(n):
            trace.append({"monitors": vals[i], "n_psi": 0, "theta": problem.model.theta,
                          "hmc_accept": 1, "flip_accept": 0, "theta_accept": 0})
        extra = {"dt": cfg["euler"]["dt"]}
    else:
        raise ConfigError("method", f"unknown prior method {method!r}")
    trace.sampling_wall_s = time.perf_counter() - t0
    trace.to_csv(os.path.join(out_dir, "trace.csv"))
    x = trace.column("x_mid")
    summary = {"command": "prior", "method": method, "model": problem.model.name, "T": T,
               "seed": cfg["seed"], "iters": n, "ess_x_mid": float(ess(x)) if n >= 10 else None,
               "x_mid": _quantiles(x), "mean_n_psi": float(np.mean(trace.column("n_psi"))),
               **extra}
    return _finish(out_dir, summary, trace)


def run_posterior(cfg, out_dir, resume=False, infer=None, command="posterior"):
    problem = problem_from_cfg(cfg, require_obs=True)
    summary, trace = _gibbs_experiment(command, cfg, out_dir, resume, problem, infer)
    return _finish(out_dir, summary, trace)


def run_params(cfg, out_dir, resume=False):
    return run_posterior(cfg, out_dir, resume, infer=True, command="params")


def run_stocks(cfg, out_dir, resume=False):
    problem = problem_from_cfg(cfg, stock=True)
    series = problem.stock
    summary, trace = _gibbs_experiment("stocks", cfg, out_dir, resume, problem,
                                       extra_times=series.times)
    grid, q = summary.pop("_band")
    tt, tv = series.test
    idx = np.searchsorted(grid, tt)
    summary.update({
        "n_rows": int(series.prices.size), "n_train": series.n_train, "n_test": series.n_test,
        "detrend": series.detrend,
        "train_band_coverage": _band_coverage(grid, q, *series.train),
        "test_band_coverage": _band_coverage(grid, q, tt, tv),
        "test_abs_error_median": float(np.mean(np.abs(q[1][idx] - tv))),
    })
    return _finish(out_dir, summary, trace)


def run_baseline(cfg, out_dir, algo="pf", resume=False):
    if algo == "euler":
        return run_prior(cfg, out_dir, method="euler")
    problem = problem_from_cfg(cfg, require_obs=True)
    os.makedirs(out_dir, exist_ok=True)
    T = problem.T
    mon = cfg["monitor"]["times"] or [T / 2]
    if algo in ("pf", "rwpf"):
        kind = "euler" if algo == "pf" else "rw"
        pf_cfg = PfConfig(kind, cfg["pf"]["n_particles"], cfg["euler"]["dt"])
        rng = RngStream(cfg["seed"], CHAIN_STREAM)
        t0 = time.perf_counter()
        res = run_pf(problem.model, problem.obs, pf_cfg, rng, T, mon)
        wall = time.perf_counter() - t0
        with open(os.path.join(out_dir, "filter.csv"), "w") as fh:
            fh.write("time,mean,variance\n")
            for j, t in enumerate(res.times):
                s = filter_statistics(res.paths[:, j], res.weights)
                fh.write(f"{float(t)!r},{s['mean']!r},{s['variance']!r}\n")
        summary = {"command": "baseline", "algo": algo, "model": problem.model.name, "T": T,
                   "seed": cfg["seed"], "n_particles": pf_cfg.n_particles, "log_lik": res.log_lik,
                   "last_observation": filter_statistics(res.last_values, res.last_weights)}
        trace = Trace()
        trace.sampling_wall_s = wall
        return _finish(out_dir, summary, trace)
    if algo in ("pmcmc", "pimh"):
        pf_cfg = PfConfig(cfg["pf"]["kind"], cfg["pf"]["n_particles"], cfg["euler"]["dt"])
        proposal = None
        if algo == "pimh":
            proposal = ThetaProposal(cfg["params"]["proposal"], cfg["params"]["rw_scale"])
        runner = PimhRunner(problem, pf_cfg, cfg["seed"], proposal, mon)
        trace = run_mcmc(runner, cfg, out_dir, resume)
        summary = {"command": "baseline", "algo": algo, "model": problem.model.name, "T": T,
                   "seed": cfg["seed"], "pf": pf_cfg.kind,
                   **chain_summary(trace, cfg, runner.counters())}
        summary["acceptance"]["pimh"] = runner.counts["path_accept"] / max(1, runner.counts["sweeps"])
        return _finish(out_dir, summary, trace)
    raise ConfigError("algo", f"unknown baseline {algo!r}")


def run_filter_bench(cfg, out_dir):
    from .benchmark import filtering_benchmark
    problem = problem_from_cfg(cfg, require_obs=True)
    os.makedirs(out_dir, exist_ok=True)
    result = filtering_benchmark(problem, cfg, out_dir)
    trace = Trace()
    trace.sampling_wall_s = result.pop("total_wall_s")
    return _finish(out_dir, result, trace)
