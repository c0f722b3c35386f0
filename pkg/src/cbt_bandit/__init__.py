"""Confidence-bound-target strategies for the infinite-arms bandit problem."""

from .core import NEW_ARM, ArmState, GameState, RunRecord, arm_mean_and_sd, update_arm
from .engine import ExperimentConfig, MonteCarloSummary, monte_carlo, simulate_run
from .policies import cbt_bound, parse_policy
from .priors import (
    OneMinusCosPrior,
    PowerLaw,
    SinPrior,
    Uniform01,
    asymptotic_constant,
    i_beta,
    lambda_of,
    optimal_target,
    parse_prior,
    r_n_of,
)
from .rewards import load_dataset, parse_reward

__version__ = "0.1.0"
