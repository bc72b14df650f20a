"""JSON configuration: schema validation, defaults and round trips."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsde.config import (
    DEFAULTS,
    SCHEMA,
    burnin,
    dumps,
    has_observations,
    load_config,
    loads,
    save_config,
    validate,
)
from exactsde.errors import ConfigError


def minimal(**extra):
    cfg = {"model": {"name": "hyperbolic", "theta": 1.0}, "T": 2.0}
    cfg.update(extra)
    return cfg


class TestValidation:
    def test_defaults_filled(self):
        cfg = validate(minimal())
        assert cfg["hmc"] == DEFAULTS["hmc"]
        assert cfg["hmc"]["step_size"] == 0.2 and cfg["hmc"]["n_leapfrog"] == 5
        assert cfg["hmc"]["mass"] == 100.0 and cfg["observations"]["sigma_y"] == 0.2
        assert cfg["tempering"]["ladder"] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]

    def test_partial_section_merges_with_defaults(self):
        cfg = validate(minimal(hmc={"step_size": 0.05}))
        assert cfg["hmc"]["step_size"] == 0.05 and cfg["hmc"]["n_leapfrog"] == 5

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError) as exc:
            validate(minimal(hmc={"stepsize": 0.1}))
        assert exc.value.key == "hmc.stepsize"
        with pytest.raises(ConfigError) as exc:
            validate(minimal(colour="blue"))
        assert exc.value.key == "colour"

    @pytest.mark.parametrize("T", [0.0, -1.0])
    def test_non_positive_horizon(self, T):
        with pytest.raises(ConfigError) as exc:
            validate(minimal(T=T))
        assert exc.value.key == "T"

    def test_missing_model(self):
        with pytest.raises(ConfigError) as exc:
            validate({"T": 1.0})
        assert exc.value.key == "model"

    @pytest.mark.parametrize("patch,key", [
        ({"model": {"name": "tempered_sine"}}, "model.c"),
        ({"model": {"name": "constant_phi", "c": 0.1}}, "model.c"),
        ({"model": {"name": "hyperbolic", "theta": -1.0}}, "model.theta"),
        ({"observations": {"times": [1.0]}}, "observations"),
        ({"observations": {"times": [1.0, 2.0], "values": [0.0]}}, "observations.values"),
        ({"tempering": {"ladder": [0.0, 0.5]}}, "tempering.ladder"),
        ({"mcmc": {"iters": 10, "burnin": 10}}, "mcmc.burnin"),
        ({"hmc": {"mass_mode": "diagonal"}}, "hmc.mass_mode"),
    ])
    def test_semantic_errors(self, patch, key):
        with pytest.raises(ConfigError) as exc:
            validate(minimal(**patch))
        assert exc.value.key == key

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            validate([1, 2])
        with pytest.raises(ConfigError):
            loads("{not json")


class TestHelpers:
    def test_empty_observations_mean_prior_mode(self):
        assert not has_observations(validate(minimal()))
        assert not has_observations(validate(minimal(observations={"times": [], "values": []})))
        assert has_observations(validate(minimal(observations={"times": [1.0], "values": [0.2]})))
        assert has_observations(validate(minimal(observations={"synthetic": {"n_obs": 5}})))

    def test_default_burnin_is_tenth(self):
        assert burnin(validate(minimal(mcmc={"iters": 1005}))) == 100
        assert burnin(validate(minimal(mcmc={"iters": 100, "burnin": 7}))) == 7

    def test_schema_is_json(self):
        assert json.loads(json.dumps(SCHEMA))["required"] == ["model"]


class TestRoundTrip:
    def test_save_and_load(self, tmp_path):
        cfg = validate(minimal(observations={"times": [0.5, 1.0], "values": [0.1, -0.2]}))
        save_config(cfg, tmp_path / "c.json")
        assert load_config(tmp_path / "c.json") == cfg

    @settings(max_examples=40, deadline=None)
    @given(T=st.floats(1e-3, 1e3), eps=st.floats(1e-4, 1.0), n=st.integers(1, 50),
           seed=st.integers(0, 2**31), mode=st.sampled_from(["scalar", "stiffness"]))
    def test_round_trip_property(self, T, eps, n, seed, mode):
        cfg = validate(minimal(T=T, seed=seed,
                               hmc={"step_size": eps, "n_leapfrog": n, "mass_mode": mode}))
        assert loads(dumps(cfg)) == cfg
