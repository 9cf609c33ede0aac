"""Undecided state dynamics with a stubborn preferred opinion.

Agents hold Opinion 1, Opinion 2 or are undecided.  A random scheduler picks
an ordered pair (initiator, responder) and only the initiator updates:

* an Opinion-2 initiator meeting Opinion 1 becomes undecided,
* an Opinion-1 initiator meeting Opinion 2 keeps its opinion with
  probability ``p`` (the stubbornness) and becomes undecided otherwise,
* an undecided initiator adopts the responder's opinion,
* everything else is neutral.

Since agents are anonymous the process lives on counts ``(x1, x2, u)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

__all__ = [
    "AgentState",
    "Configuration",
    "ProtocolParams",
    "InteractionOutcome",
    "transition",
    "step_distribution",
    "productive_weights",
    "productive_probability",
    "sample_step",
    "sample_productive_step",
    "geometric_skip",
    "pick_category",
]


class AgentState(enum.IntEnum):
    """Local state of one agent."""

    UNDECIDED = 0
    OPINION1 = 1
    OPINION2 = 2


@dataclass(frozen=True)
class Configuration:
    """Counts of Opinion-1, Opinion-2 and undecided agents."""

    x1: int
    x2: int
    u: int

    def __post_init__(self) -> None:
        for name in ("x1", "x2", "u"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, int(value))
        if self.n < 2:
            raise ValueError(f"population must have at least 2 agents, got n={self.n}")

    @property
    def n(self) -> int:
        return self.x1 + self.x2 + self.u

    @property
    def is_absorbed(self) -> bool:
        """All agents share one opinion."""
        return self.x1 == self.n or self.x2 == self.n

    @property
    def is_frozen(self) -> bool:
        """All agents undecided; no rule can ever fire."""
        return self.u == self.n

    @property
    def is_terminal(self) -> bool:
        return self.is_absorbed or self.is_frozen

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.x1, self.x2, self.u)

    def mirrored(self) -> "Configuration":
        """Swap the roles of the two opinions."""
        return Configuration(self.x2, self.x1, self.u)

    @classmethod
    def parse(cls, text: str) -> "Configuration":
        """Parse ``"x1,x2,u"``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'x1,x2,u', got {text!r}")
        return cls(*(int(s) for s in parts))

    def __str__(self) -> str:
        return f"({self.x1},{self.x2},{self.u})"


@dataclass(frozen=True)
class ProtocolParams:
    """Stubbornness plus the scheduler convention.

    With ``self_pairs=True`` initiator and responder are drawn independently,
    so an agent may meet itself (always neutral) and every transition
    probability carries an ``n**2`` denominator.  With ``self_pairs=False``
    the two agents are distinct and the denominator is ``n*(n-1)``.
    """

    p: float
    self_pairs: bool = True

    def __post_init__(self) -> None:
        p = float(self.p)
        if not (0.0 <= p <= 1.0) or math.isnan(p):
            raise ValueError(f"stubbornness must lie in [0, 1], got {self.p!r}")
        object.__setattr__(self, "p", p)

    def pair_count(self, n: int) -> int:
        return n * n if self.self_pairs else n * (n - 1)


class InteractionOutcome(NamedTuple):
    next: Configuration
    elapsed: int


def transition(initiator: AgentState, responder: AgentState, r: float, p: float) -> AgentState:
    """New state of the initiator; the responder never changes.

    The random branch of an (Opinion1, Opinion2) meeting is resolved by
    ``r``: the initiator keeps Opinion 1 iff ``r <= p``.
    """
    if initiator == AgentState.OPINION2 and responder == AgentState.OPINION1:
        return AgentState.UNDECIDED
    if initiator == AgentState.OPINION1 and responder == AgentState.OPINION2:
        return AgentState.OPINION1 if r <= p else AgentState.UNDECIDED
    if initiator == AgentState.UNDECIDED:
        return AgentState(responder)
    return AgentState(initiator)


# Productive categories, always in this order:
#   0: Opinion-1 initiator meets Opinion 2 and gives up  (x1-1, u+1)
#   1: Opinion-2 initiator meets Opinion 1               (x2-1, u+1)
#   2: undecided initiator adopts Opinion 1              (x1+1, u-1)
#   3: undecided initiator adopts Opinion 2              (x2+1, u-1)
_CATEGORY_DELTAS = ((-1, 0, 1), (0, -1, 1), (1, 0, -1), (0, 1, -1))


def _apply(c: Configuration, category: int) -> Configuration:
    d1, d2, du = _CATEGORY_DELTAS[category]
    return Configuration(c.x1 + d1, c.x2 + d2, c.u + du)


def productive_weights(c: Configuration, p: float) -> Tuple[float, float, float, float]:
    """Unnormalised weights of the four productive categories."""
    x1x2 = c.x1 * c.x2
    return ((1.0 - p) * x1x2, float(x1x2), float(c.u * c.x1), float(c.u * c.x2))


def productive_probability(c: Configuration, params: ProtocolParams) -> float:
    """Probability that one interaction changes the configuration."""
    total = (2.0 - params.p) * (c.x1 * c.x2) + c.u * (c.x1 + c.x2)
    return total / params.pair_count(c.n)


def step_distribution(
    c: Configuration, params: ProtocolParams
) -> List[Tuple[Configuration, float]]:
    """Exact law of the configuration after one interaction.

    Successors with zero probability are omitted.  The self-loop (if any)
    comes last.
    """
    pairs = params.pair_count(c.n)
    weights = productive_weights(c, params.p)
    out = [(_apply(c, k), w / pairs) for k, w in enumerate(weights) if w > 0]
    stay = (pairs - sum(weights)) / pairs
    if stay > 0:
        out.append((c, stay))
    return out


def _state_at(c: Configuration, index: int) -> AgentState:
    if index < c.x1:
        return AgentState.OPINION1
    if index < c.x1 + c.x2:
        return AgentState.OPINION2
    return AgentState.UNDECIDED


def _uniform_open_closed(rng: np.random.Generator) -> float:
    # Generator.random() is on [0, 1); flip it onto (0, 1].
    return 1.0 - rng.random()


def sample_step(
    c: Configuration, params: ProtocolParams, rng: np.random.Generator
) -> InteractionOutcome:
    """Simulate a single scheduler interaction on the counts."""
    n = c.n
    i = int(rng.integers(n))
    if params.self_pairs:
        j = int(rng.integers(n))
    else:
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
    r = _uniform_open_closed(rng)
    before = _state_at(c, i)
    after = transition(before, _state_at(c, j), r, params.p)
    if after == before:
        return InteractionOutcome(c, 1)
    counts = {AgentState.OPINION1: c.x1, AgentState.OPINION2: c.x2, AgentState.UNDECIDED: c.u}
    counts[before] -= 1
    counts[after] += 1
    nxt = Configuration(counts[AgentState.OPINION1], counts[AgentState.OPINION2], counts[AgentState.UNDECIDED])
    return InteractionOutcome(nxt, 1)


def geometric_skip(q: float, uniform: float) -> int:
    """Number of interactions up to and including the first success.

    Inverse-CDF sampling from ``uniform`` in (0, 1].
    """
    if q >= 1.0:
        return 1
    k = math.ceil(math.log(uniform) / math.log1p(-q))
    return max(1, k)


def pick_category(weights: Tuple[float, float, float, float], uniform: float) -> int:
    """Index of the category selected by ``uniform`` in (0, 1]."""
    target = uniform * sum(weights)
    acc = 0.0
    last = 0
    for k, w in enumerate(weights):
        if w <= 0:
            continue
        acc += w
        last = k
        if target <= acc:
            return k
    return last


def sample_productive_step(
    c: Configuration, params: ProtocolParams, rng: np.random.Generator
) -> InteractionOutcome:
    """Jump straight to the next configuration change.

    ``elapsed`` is Geometric(q) with ``q`` the productive probability, and
    the category is drawn proportionally to its weight.  Consumes exactly
    two uniforms from ``rng`` (skip first, then category).
    """
    if c.is_terminal:
        raise ValueError(f"configuration {c} has no productive interaction")
    q = productive_probability(c, params)
    elapsed = geometric_skip(q, _uniform_open_closed(rng))
    category = pick_category(productive_weights(c, params.p), _uniform_open_closed(rng))
    return InteractionOutcome(_apply(c, category), elapsed)
