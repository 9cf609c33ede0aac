"""Simulation and exact analysis of undecided state dynamics with stubborn agents."""

from .core import (
    AgentState,
    Configuration,
    InteractionOutcome,
    ProtocolParams,
    sample_productive_step,
    sample_step,
    step_distribution,
    transition,
)
from .engine import AbsorptionResult, BatchSummary, Outcome, TrialSpec, run_batch, run_trial
from .oracle import ExactChainSolution, solve_chain

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "Configuration",
    "InteractionOutcome",
    "ProtocolParams",
    "sample_productive_step",
    "sample_step",
    "step_distribution",
    "transition",
    "AbsorptionResult",
    "BatchSummary",
    "Outcome",
    "TrialSpec",
    "run_batch",
    "run_trial",
    "ExactChainSolution",
    "solve_chain",
]
