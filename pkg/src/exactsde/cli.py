"""Command-line entry point.

Every experiment subcommand takes ``--config <path> --seed <u64> --out <dir>``
and writes its artifacts to ``--out``.  On success the summary JSON is
printed to stdout and the exit code is 0.  On failure a JSON object
``{"error": ..., "message": ..., ...}`` is printed to stderr, the same
object is written to ``<out>/FAILED`` and the exit code is nonzero (2 for
configuration errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

from . import config as config_mod
from . import experiments
from .errors import ConfigError, DegenerateFilter, ExactSdeError, IngestionError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exactsde",
                                     description="Exact simulation and inference for EA1 diffusions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, resume=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment configuration (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", required=True, help="output directory")
        if resume:
            p.add_argument("--resume", action="store_true",
                           help="continue from the checkpoint in --out")
        return p

    p = add("prior", "exact prior simulation")
    p.add_argument("--method", choices=("gibbs", "ea1", "euler"), default="gibbs")
    add("posterior", "path posterior under noisy observations")
    add("params", "joint path and parameter posterior")
    p = add("baseline", "Euler, particle filters and particle MCMC")
    p.add_argument("--algo", choices=("euler", "pf", "rwpf", "pmcmc", "pimh"), default="pf")
    add("filter-bench", "filtering error against wall-clock budget", resume=False)
    add("stocks", "stock-price posterior and prediction")
    sub.add_parser("schema", help="print the configuration JSON schema")
    return parser


def _error_payload(exc: BaseException) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        out["key"] = exc.key
    elif isinstance(exc, IngestionError):
        out["row"] = exc.row
    elif isinstance(exc, DegenerateFilter):
        out["step"] = exc.step
    return out


def _load(args) -> dict:
    cfg = config_mod.load_config(args.config)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("seed", "seed must be an unsigned 64-bit integer")
        cfg["seed"] = args.seed
    return cfg


def _dispatch(args, cfg):
    out = args.out
    resume = getattr(args, "resume", False)
    if args.command == "prior":
        return experiments.run_prior(cfg, out, method=args.method, resume=resume)
    if args.command == "posterior":
        return experiments.run_posterior(cfg, out, resume=resume)
    if args.command == "params":
        return experiments.run_params(cfg, out, resume=resume)
    if args.command == "baseline":
        return experiments.run_baseline(cfg, out, algo=args.algo, resume=resume)
    if args.command == "filter-bench":
        return experiments.run_filter_bench(cfg, out)
    if args.command == "stocks":
        return experiments.run_stocks(cfg, out, resume=resume)
    raise AssertionError(args.command)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "schema":
        print(json.dumps(config_mod.SCHEMA, indent=2, sort_keys=True))
        return EXIT_OK
    try:
        os.makedirs(args.out, exist_ok=True)
        failed = os.path.join(args.out, "FAILED")
        if os.path.exists(failed):
            os.remove(failed)
        cfg = _load(args)
        summary = _dispatch(args, cfg)
    except Exception as exc:  # noqa: BLE001 - every failure must leave a marker
        payload = _error_payload(exc)
        if not isinstance(exc, ExactSdeError):
            payload["traceback"] = traceback.format_exc()
        code = EXIT_CONFIG if isinstance(exc, (ConfigError, OSError)) else EXIT_FAILURE
        text = json.dumps(payload, sort_keys=True)
        try:
            with open(os.path.join(args.out, "FAILED"), "w") as fh:
                fh.write(text + "\n")
        except OSError:
            pass
        print(text, file=sys.stderr)
        return code
    print(json.dumps(summary, sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
