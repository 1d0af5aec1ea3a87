"""Multilevel iteration for multigroup thermal radiative transfer in slab geometry."""

from .config import ConfigError, RunConfig, load_config, parse_config
from .driver import (
    IterationStats,
    NonConvergenceError,
    Problem,
    advance_time_step,
    reference_fixed_point,
    run,
    v_cycle,
)

__all__ = [
    "ConfigError",
    "IterationStats",
    "NonConvergenceError",
    "Problem",
    "RunConfig",
    "advance_time_step",
    "load_config",
    "parse_config",
    "reference_fixed_point",
    "run",
    "v_cycle",
]
