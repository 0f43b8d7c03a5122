"""Prey-predator lab.

A discrete wolf-sheep predation world with pluggable behavioral rules
and a seeded Monte Carlo outcome harness, next to the continuous
Lotka-Volterra system with its conserved Lyapunov-style function.
"""

from .core import (
    Agent,
    ConfigError,
    OutcomeClass,
    PopulationHistory,
    RunOutcome,
    SimConfig,
    Species,
    WorldState,
    classify,
    init_world,
)
from .engine import TickReport, run_single, step
from .montecarlo import (
    BatchSpec,
    BatchStats,
    aggregate,
    compare_strategies,
    derive_seed,
    run_batch,
    run_outcomes,
)
from .strategies import (
    ReproductionContext,
    StrategySet,
    flocking_heading,
    reproduction_probability,
    sacrifice_move,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "BatchSpec",
    "BatchStats",
    "ConfigError",
    "OutcomeClass",
    "PopulationHistory",
    "ReproductionContext",
    "RunOutcome",
    "SimConfig",
    "Species",
    "StrategySet",
    "TickReport",
    "WorldState",
    "aggregate",
    "classify",
    "compare_strategies",
    "derive_seed",
    "flocking_heading",
    "init_world",
    "reproduction_probability",
    "run_batch",
    "run_outcomes",
    "run_single",
    "sacrifice_move",
    "step",
]
