"""Randomized allocation strategies for nonparametric contextual bandits with delayed rewards."""

from .core import (
    NEVER,
    ArrivalLedger,
    Context,
    Never,
    Observation,
    Schedule,
    Strategy,
    UsageError,
    eval_schedule,
    observed_set,
    parse_schedule,
    tau,
)
from .harness import ExperimentConfig, preset_config, run_experiment, sweep

__version__ = "0.1.0"
