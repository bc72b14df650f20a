"""Exact simulation and posterior inference for one-dimensional EA1 diffusions.

The prior path law of ``dX = alpha(X) dt + dW`` is represented by finite
skeletons: exact prior draws come from the EA1 rejection sampler, and
posterior draws under noisy observations from an auxiliary-variable Gibbs
sampler whose state is a Poisson skeleton with path values updated by HMC.
"""

from .baselines import (PfConfig, PimhState, bootstrap_pf, euler_simulate, pimh_init,
                        pimh_step, random_weight_pf)
from .diagnostics import Trace, ess, ks_two_sample, read_skeleton_jsonl
from .ea1 import Ea1Result, ea1_simulate, simulate_path
from .errors import (BudgetExceeded, ConfigError, ContractViolation, DegenerateFilter,
                     ExactSdeError, IngestionError, InvalidArgument, InvalidConfiguration,
                     UnsupportedModel)
from .gibbs import ChainState, GibbsConfig, gibbs_sweep, init_state, run_chain
from .hmc import HmcConfig
from .models import (Ea1Model, Exponential, Flat, Normal, PointMass, Uniform, build_model,
                     constant_phi_model, hyperbolic_model, sine_model, tempered_sine_model)
from .params import ThetaProposal, log_theta_posterior, theta_step
from .skeleton import ObservationSet, Skeleton
from .stochastic import RngStream, sample_poisson_process
from .tempering import make_ladder, run_tempered

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ChainState", "ConfigError", "ContractViolation", "DegenerateFilter",
    "Ea1Model", "Ea1Result", "ExactSdeError", "Exponential", "Flat", "GibbsConfig",
    "HmcConfig", "IngestionError", "InvalidArgument", "InvalidConfiguration", "Normal",
    "ObservationSet", "PfConfig", "PimhState", "PointMass", "RngStream", "Skeleton",
    "ThetaProposal", "Trace", "Uniform", "UnsupportedModel", "bootstrap_pf", "build_model",
    "constant_phi_model", "ea1_simulate", "ess", "euler_simulate", "gibbs_sweep",
    "hyperbolic_model", "init_state", "ks_two_sample", "log_theta_posterior", "make_ladder",
    "pimh_init", "pimh_step", "random_weight_pf", "read_skeleton_jsonl", "run_chain",
    "run_tempered", "sample_poisson_process", "simulate_path", "sine_model",
    "tempered_sine_model", "theta_step",
]
