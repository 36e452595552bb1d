"""Anytime-valid sequential tests for bounded means, built from betting
martingales: per-observation updates, stake mixtures, growth analysis,
always-valid confidence bounds, Monte Carlo and exact stopping-time
oracles, plus a CLI and a session service for live audit sampling."""

from betmart.config import ConstantStake, Side, StakeSchedule, TestConfig
from betmart.martingale import (
    Branch,
    Decision,
    MartingaleState,
    batch_step,
    decision,
    factor,
    step,
    two_sided_value,
)
from betmart.mixtures import (
    MixtureSpec,
    MixtureState,
    WeightedNodes,
    effective_c,
    mixture_init,
    mixture_update,
    mixture_value,
)
from betmart.distributions import Alt, BetaDist, FiniteSupport, PointMass, ScaledAlt
from betmart.analysis import (
    c_max,
    c_opt,
    deterministic_n,
    exact_stop_dist,
    inverse_signal_threshold,
    kl_alt,
    lambda_fn,
    size_bounds,
    wald_n,
)
from betmart.confidence import (
    BoundMode,
    BoundResult,
    IntervalResult,
    PowerFamily,
    interval,
    upper_bound,
    validate_c_policy,
)
from betmart.simulation import Both, PrecisionStop, RejectAtAlpha, Scenario, experiment, run_trial

__version__ = "0.1.0"

__all__ = [
    "Alt",
    "BetaDist",
    "Both",
    "BoundMode",
    "BoundResult",
    "Branch",
    "ConstantStake",
    "Decision",
    "FiniteSupport",
    "IntervalResult",
    "MartingaleState",
    "MixtureSpec",
    "MixtureState",
    "PointMass",
    "PowerFamily",
    "PrecisionStop",
    "RejectAtAlpha",
    "ScaledAlt",
    "Scenario",
    "Side",
    "StakeSchedule",
    "TestConfig",
    "WeightedNodes",
    "batch_step",
    "c_max",
    "c_opt",
    "decision",
    "deterministic_n",
    "effective_c",
    "exact_stop_dist",
    "experiment",
    "factor",
    "interval",
    "inverse_signal_threshold",
    "kl_alt",
    "lambda_fn",
    "mixture_init",
    "mixture_update",
    "mixture_value",
    "run_trial",
    "size_bounds",
    "step",
    "two_sided_value",
    "upper_bound",
    "validate_c_policy",
    "wald_n",
    "__version__",
]
