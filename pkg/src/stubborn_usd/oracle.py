"""Exact absorption probabilities and times for small populations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import Configuration, ProtocolParams, step_distribution
from .engine import TrialSpec, run_batch

__all__ = [
    "DEFAULT_CAP",
    "ExactChainSolution",
    "MonteCarloComparison",
    "configurations",
    "solve_chain",
    "compare_monte_carlo",
]

DEFAULT_CAP = 60


def configurations(n: int) -> List[Configuration]:
    """All ``(x1, x2, u)`` with ``x1 + x2 + u = n``.

    Ordered by ``x1 + x2`` descending, then ``x1`` descending.
    """
    out = []
    for decided in range(n, -1, -1):
        for x1 in range(decided, -1, -1):
            out.append(Configuration(x1, decided - x1, n - decided))
    return out


@dataclass(frozen=True)
class ExactChainSolution:
    n: int
    p: float
    states: Tuple[Configuration, ...]
    win1_values: np.ndarray
    win2_values: np.ndarray
    time_values: np.ndarray  # NaN where absorption is not almost sure
    residual: float

    def index(self, c: Configuration) -> int:
        if c.n != self.n:
            raise ValueError(f"configuration {c} has n={c.n}, solution has n={self.n}")
        return self._lookup[c]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_lookup", {c: k for k, c in enumerate(self.states)})

    def win1(self, c: Configuration) -> float:
        return float(self.win1_values[self.index(c)])

    def win2(self, c: Configuration) -> float:
        return float(self.win2_values[self.index(c)])

    def exp_time(self, c: Configuration) -> Optional[float]:
        value = self.time_values[self.index(c)]
        return None if math.isnan(value) else float(value)

    def as_dict(self, c: Configuration) -> dict:
        return {
            "x1": c.x1, "x2": c.x2, "u": c.u,
            "win1": self.win1(c), "win2": self.win2(c), "exp_time": self.exp_time(c),
        }


def _transition_matrix(states, params) -> np.ndarray:
    lookup = {c: k for k, c in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for k, c in enumerate(states):
        for nxt, prob in step_distribution(c, params):
            P[k, lookup[nxt]] += prob
    return P


def solve_chain(n: int, p: float, cap: int = DEFAULT_CAP) -> ExactChainSolution:
    """Absorption probabilities and expected absorption times for all states.

    Direct dense solve of ``(I - Q) h = b`` over the transient states
    (everything except the two consensus states and the all-undecided
    state).  The self-loop mass stays in ``Q``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the exact-solver cap {cap}")
    params = ProtocolParams(p)
    states = configurations(n)
    P = _transition_matrix(states, params)
    size = len(states)
    top = states.index(Configuration(n, 0, 0))
    bottom = states.index(Configuration(0, n, 0))
    frozen = states.index(Configuration(0, 0, n))
    terminal = {top, bottom, frozen}
    transient = np.array([k for k in range(size) if k not in terminal])

    A = np.eye(len(transient)) - P[np.ix_(transient, transient)]
    rhs = np.column_stack([P[transient, top], P[transient, bottom], np.ones(len(transient))])
    sol = np.linalg.solve(A, rhs)

    win1 = np.zeros(size)
    win2 = np.zeros(size)
    times = np.zeros(size)
    win1[transient], win2[transient], times[transient] = sol[:, 0], sol[:, 1], sol[:, 2]
    win1[top] = 1.0
    win2[bottom] = 1.0
    times[frozen] = np.nan

    # Harmonic residual on every non-terminal state.
    res1 = np.abs(win1[transient] - P[transient] @ win1)
    res2 = np.abs(win2[transient] - P[transient] @ win2)
    safe_times = np.where(np.isnan(times), 0.0, times)
    rest = np.abs(times[transient] - 1.0 - P[transient] @ safe_times)
    # Expected times are O(n^2); compare them relative to their size.
    scale = max(1.0, float(np.max(times[transient])))
    residual = float(max(res1.max(), res2.max(), rest.max() / scale))
    return ExactChainSolution(n, float(p), tuple(states), win1, win2, times, residual)


@dataclass(frozen=True)
class MonteCarloComparison:
    z_score: float
    empirical: float
    exact: float
    trials: int


def compare_monte_carlo(
    sol: ExactChainSolution, c: Configuration, trials: int, seed: int, parallelism: int = 1
) -> MonteCarloComparison:
    """z-score of the simulated Opinion-1 win rate against the exact value.

    When the exact value is 0 or 1 the binomial error vanishes; ``z`` is 0
    if the simulation agrees and infinite otherwise.
    """
    spec = TrialSpec(c, ProtocolParams(sol.p), seed=seed)
    summary = run_batch(spec, trials, parallelism)
    exact = sol.win1(c)
    empirical = summary.wins1 / trials
    var = exact * (1.0 - exact) / trials
    if exact < 1e-12 or exact > 1.0 - 1e-12:
        z = 0.0 if abs(empirical - exact) < 1e-12 else math.inf
    else:
        z = (empirical - exact) / math.sqrt(var)
    return MonteCarloComparison(z, empirical, exact, trials)
