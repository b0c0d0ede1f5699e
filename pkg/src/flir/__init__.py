"""Spectral cut-off estimation for functional linear instrumental regression."""

from .dgp import (DecayFamily, Sample, SpectrumSpec, from_decay, make_slope, read_sample,
                  simulate_sample, write_sample)
from .errors import (AliasingError, ConfigError, ConsistencyWarning, DegenerateEndogeneityError,
                     DomainError, FlirError, InfeasibleBalanceError, InvariantError,
                     ParameterError)
from .estimator import estimate_beta, oracle_beta_reg, run_pipeline, threshold_rule
from .experiments import ExperimentConfig, RiskReport, fit_rate, mc_risk, run_report
from .spectral import FourierSeq, SobolevParams, gamma, sobolev_norm_sq
from .theory import IndexFunction, balance, check_link, minimax_rate

__version__ = "0.1.0"

__all__ = [
    "AliasingError", "ConfigError", "ConsistencyWarning", "DecayFamily",
    "DegenerateEndogeneityError", "DomainError", "ExperimentConfig", "FlirError",
    "FourierSeq", "IndexFunction", "InfeasibleBalanceError", "InvariantError",
    "ParameterError", "RiskReport", "Sample", "SobolevParams", "SpectrumSpec",
    "balance", "check_link", "estimate_beta", "fit_rate", "from_decay", "gamma",
    "make_slope", "mc_risk", "minimax_rate", "oracle_beta_reg", "read_sample",
    "run_pipeline", "run_report", "simulate_sample", "sobolev_norm_sq",
    "threshold_rule", "write_sample",
]
