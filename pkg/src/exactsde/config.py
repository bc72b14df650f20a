"""Experiment configuration: JSON schema, defaults and (de)serialisation."""

from __future__ import annotations

import copy
import json
import math

import jsonschema

from .errors import ConfigError

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_DIST = _obj({
    "kind": {"enum": ["point", "normal", "uniform", "exponential", "flat"]},
    "value": _NUM, "mean": _NUM, "sd": _POS, "low": _NUM, "high": _NUM, "rate": _POS,
}, required=["kind"])

SCHEMA = _obj({
    "model": _obj({
        "name": {"enum": ["hyperbolic", "sine", "tempered_sine", "constant_phi"]},
        "theta": _NUM,
        "c": _NUM,
        "M": _POS,
        "initial": _DIST,
        "prior": _DIST,
    }, required=["name"]),
    "T": _POS,
    "observations": _obj({
        "times": {"type": "array", "items": _NUM},
        "values": {"type": "array", "items": _NUM},
        "synthetic": _obj({"n_obs": _POS_INT, "seed": _NONNEG_INT,
                           "theta": _NUM}, required=["n_obs"]),
        "stock_csv": {"type": ["string", "null"]},
        "detrend": {"enum": ["multiplicative", "additive"]},
        "sigma_y": _POS,
    }),
    "mcmc": _obj({
        "iters": _POS_INT,
        "burnin": {"type": ["integer", "null"], "minimum": 0},
        "thin": _POS_INT,
        "flip_move": {"type": "boolean"},
        "init": {"enum": ["auto", "ea1", "prior", "observations"]},
        "max_attempts": _POS_INT,
    }),
    "hmc": _obj({"step_size": _POS, "n_leapfrog": _POS_INT, "mass": _POS,
                 "mass_mode": {"enum": ["scalar", "stiffness"]}}),
    "params": _obj({
        "infer": {"type": "boolean"},
        "proposal": {"enum": ["prior", "random_walk"]},
        "rw_scale": _POS,
    }),
    "tempering": _obj({
        "enabled": {"type": "boolean"},
        "ladder": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                   "minItems": 1},
    }),
    "pf": _obj({"n_particles": _POS_INT, "kind": {"enum": ["euler", "rw"]}}),
    "euler": _obj({"dt": _POS, "n_paths": _POS_INT}),
    "monitor": _obj({"times": {"type": ["array", "null"], "items": _NUM}}),
    "output": _obj({
        "snapshot_every": _POS_INT,
        "timing": {"type": "boolean"},
        "band_points": {"type": "integer", "minimum": 2},
    }),
    "bench": _obj({
        "budgets_s": {"type": "array", "items": _POS, "minItems": 1},
        "n_seeds": _POS_INT,
        "reference_particles": _POS_INT,
    }),
    "seed": _NONNEG_INT,
}, required=["model"])

DEFAULTS = {
    "observations": {"sigma_y": 0.2, "detrend": "multiplicative"},
    "mcmc": {"iters": 10000, "burnin": None, "thin": 1, "flip_move": False, "init": "auto",
             "max_attempts": 10 ** 6},
    "hmc": {"step_size": 0.2, "n_leapfrog": 5, "mass": 100.0, "mass_mode": "scalar"},
    "params": {"infer": False, "proposal": "prior", "rw_scale": 0.2},
    "tempering": {"enabled": False, "ladder": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]},
    "pf": {"n_particles": 50, "kind": "euler"},
    "euler": {"dt": 0.01, "n_paths": 1000},
    "monitor": {"times": None},
    "output": {"snapshot_every": 10, "timing": True, "band_points": 101},
    "bench": {"budgets_s": [0.25, 0.5, 1.0, 2.0, 4.0], "n_seeds": 10,
              "reference_particles": 200000},
    "seed": 0,
}


def _key_of(err) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        name = ".".join(filter(None, [path, extra[0] if extra else ""]))
        return name or "<root>"
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        return ".".join(filter(None, [path, missing]))
    return path or "<root>"


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(cfg: dict) -> dict:
    """Validate ``cfg`` and return a copy with defaults filled in."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_key_of(e), e.message)
    out = _merge(DEFAULTS, cfg)
    obs = out["observations"]
    if ("times" in obs) != ("values" in obs):
        raise ConfigError("observations", "times and values must be given together")
    if "times" in obs and len(obs["times"]) != len(obs["values"]):
        raise ConfigError("observations.values", "length differs from observations.times")
    model = out["model"]
    if model["name"] == "tempered_sine" and "c" not in model:
        raise ConfigError("model.c", "tempered_sine needs an inverse temperature c")
    if model["name"] == "constant_phi" and ("c" not in model or "M" not in model):
        raise ConfigError("model.c", "constant_phi needs both c and M")
    if model["name"] == "hyperbolic" and "theta" in model and not model["theta"] > 0:
        raise ConfigError("model.theta", "hyperbolic theta must be positive")
    if out["tempering"]["ladder"][-1] != 1.0:
        raise ConfigError("tempering.ladder", "ladder must end at 1")
    burnin = out["mcmc"]["burnin"]
    if burnin is not None and burnin >= out["mcmc"]["iters"]:
        raise ConfigError("mcmc.burnin", "burn-in must be smaller than iters")
    return out


def has_observations(cfg: dict) -> bool:
    obs = cfg.get("observations", {})
    return bool(obs.get("times")) or "synthetic" in obs or bool(obs.get("stock_csv"))


def burnin(cfg: dict) -> int:
    b = cfg["mcmc"]["burnin"]
    return int(math.floor(0.1 * cfg["mcmc"]["iters"])) if b is None else int(b)


def loads(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return validate(raw)


def load_config(path) -> dict:
    with open(path) as fh:
        return loads(fh.read())


def dumps(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True)


def save_config(cfg: dict, path):
    with open(path, "w") as fh:
        fh.write(dumps(cfg) + "\n")
