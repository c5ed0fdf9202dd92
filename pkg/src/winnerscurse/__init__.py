"""Correcting the winner's curse in significant genetic association effects.

Frequentist (conditional likelihood) and Bayesian (spike-and-slab with model
averaging) estimators for an effect that was reported only because its test
statistic crossed a significance threshold.
"""

__version__ = "0.1.0"

from .bma import (BridgeEstimate, ModelPair, bma_estimate, bridge_ratio, marginal_ratio_oracle,
                  posterior_model_weights, prior_model_weights)
from .estimators import (EstimateRecord, NotSignificantError, conditional_mle, naive_estimate,
                         profile_confidence_interval)
from .oracle import PosteriorOracle, posterior_oracle
from .pipeline import BayesSettings, Correction, correct, derive_seed
from .sampler import ChainConfig, ChainResult, SpikeSlabPrior, hpd_interval, preset, run_chain
from .simulation import Scenario, SimulationConfig, SummaryTable, run_scenario
from .stats import TestContext, conditional_bias, critical_value, required_sample_size

__all__ = [
    "BayesSettings", "BridgeEstimate", "ChainConfig", "ChainResult", "Correction", "EstimateRecord",
    "ModelPair", "NotSignificantError", "PosteriorOracle", "Scenario", "SimulationConfig",
    "SpikeSlabPrior", "SummaryTable", "TestContext", "bma_estimate", "bridge_ratio",
    "conditional_bias", "conditional_mle", "correct", "critical_value", "derive_seed", "hpd_interval",
    "marginal_ratio_oracle", "naive_estimate", "posterior_model_weights", "posterior_oracle", "preset",
    "prior_model_weights", "profile_confidence_interval", "required_sample_size", "run_chain",
    "run_scenario",
]
