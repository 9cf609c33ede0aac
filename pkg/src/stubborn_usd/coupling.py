"""Monotone coupling of two processes on shared scheduler randomness.

Agent states are ordered ``Opinion1 > Undecided > Opinion2`` and
configurations by ``x1 >= x1'`` and ``x1 + u >= x1' + u'``.  Two labeled
populations, each kept sorted so that label 0 holds the best state, are
advanced with the same ``(i, j, r)``.  If the first process has the larger
stubbornness and the better configuration, it stays better forever.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

from .core import AgentState, Configuration, transition
from .rng import Stream

__all__ = [
    "RANK",
    "state_geq",
    "config_geq",
    "LabeledPopulation",
    "SchedulerDraw",
    "draw",
    "coupled_step",
    "MonotoneReport",
    "check_monotone_run",
    "InteractionCase",
    "interaction_table",
    "interaction_order_violations",
    "random_instance",
]

RANK = {AgentState.OPINION1: 2, AgentState.UNDECIDED: 1, AgentState.OPINION2: 0}


def state_geq(q: AgentState, q2: AgentState) -> bool:
    return RANK[AgentState(q)] >= RANK[AgentState(q2)]


def config_geq(c: Configuration, c2: Configuration) -> bool:
    if c.n != c2.n:
        raise ValueError(f"cannot compare configurations of size {c.n} and {c2.n}")
    return c.x1 >= c2.x1 and c.x1 + c.u >= c2.x1 + c2.u


@dataclass(frozen=True)
class LabeledPopulation:
    """Sorted labeled agents, stored as the counts that determine them.

    Labels ``0 .. x1-1`` hold Opinion 1, the next ``u`` labels are
    undecided and the last ``x2`` labels hold Opinion 2.
    """

    config: Configuration

    @classmethod
    def from_states(cls, states: Sequence[AgentState]) -> "LabeledPopulation":
        """Counting-sort an arbitrary assignment of states to labels."""
        states = [AgentState(s) for s in states]
        return cls(Configuration(
            states.count(AgentState.OPINION1),
            states.count(AgentState.OPINION2),
            states.count(AgentState.UNDECIDED),
        ))

    @property
    def n(self) -> int:
        return self.config.n

    def state(self, label: int) -> AgentState:
        c = self.config
        if not 0 <= label < c.n:
            raise IndexError(f"label {label} out of range for n={c.n}")
        if label < c.x1:
            return AgentState.OPINION1
        if label < c.x1 + c.u:
            return AgentState.UNDECIDED
        return AgentState.OPINION2

    @property
    def states(self) -> Tuple[AgentState, ...]:
        c = self.config
        return ((AgentState.OPINION1,) * c.x1 + (AgentState.UNDECIDED,) * c.u
                + (AgentState.OPINION2,) * c.x2)

    def is_sorted(self) -> bool:
        s = self.states
        return all(state_geq(a, b) for a, b in zip(s, s[1:]))


class SchedulerDraw(NamedTuple):
    i: int  # initiator label
    j: int  # responder label
    r: float  # in (0, 1]


def draw(n: int, rng, self_pairs: bool = False) -> SchedulerDraw:
    i = rng.integers(n)
    if self_pairs:
        j = rng.integers(n)
    else:
        j = rng.integers(n - 1)
        if j >= i:
            j += 1
    return SchedulerDraw(int(i), int(j), 1.0 - rng.random())


def _step(pop: LabeledPopulation, p: float, d: SchedulerDraw) -> LabeledPopulation:
    before = pop.state(d.i)
    after = transition(before, pop.state(d.j), d.r, p)
    if after == before:
        return pop
    counts = {AgentState.OPINION1: pop.config.x1, AgentState.OPINION2: pop.config.x2,
              AgentState.UNDECIDED: pop.config.u}
    counts[before] -= 1
    counts[after] += 1
    return LabeledPopulation(Configuration(
        counts[AgentState.OPINION1], counts[AgentState.OPINION2], counts[AgentState.UNDECIDED]))


def coupled_step(
    a: LabeledPopulation, p: float, b: LabeledPopulation, p_tilde: float, d: SchedulerDraw
) -> Tuple[LabeledPopulation, LabeledPopulation]:
    """Apply the same draw to both sorted populations, then re-sort both."""
    if p < p_tilde:
        raise ValueError(f"need p >= p_tilde, got {p} < {p_tilde}")
    if not config_geq(a.config, b.config):
        raise ValueError(f"need {a.config} to dominate {b.config}")
    return _step(a, p, d), _step(b, p_tilde, d)


@dataclass(frozen=True)
class MonotoneReport:
    preserved: bool
    first_violation: Optional[int]
    final: Tuple[Configuration, Configuration]
    steps: int


def check_monotone_run(
    c: Configuration,
    p: float,
    c_tilde: Configuration,
    p_tilde: float,
    steps: int,
    seed: int,
    self_pairs: bool = False,
) -> MonotoneReport:
    """Run the coupled pair for ``steps`` interactions, checking the order.

    Equivalent to feeding :func:`draw` on ``Stream(seed)`` into
    :func:`coupled_step` repeatedly, but works on raw counts.
    """
    if p < p_tilde:
        raise ValueError(f"need p >= p_tilde, got {p} < {p_tilde}")
    if not config_geq(c, c_tilde):
        raise ValueError(f"need {c} to dominate {c_tilde}")
    n = c.n
    m = n if self_pairs else n - 1
    rng = Stream(seed)
    a = [c.x1, c.x2, c.u]
    b = [c_tilde.x1, c_tilde.x2, c_tilde.u]
    chunk = 4096
    t = 0
    while t < steps:
        block = rng.random(3 * min(chunk, steps - t))
        for k in range(0, len(block), 3):
            t += 1
            i = min(int(block[k] * n), n - 1)
            j = min(int(block[k + 1] * m), m - 1)
            if not self_pairs and j >= i:
                j += 1
            r = 1.0 - block[k + 2]
            _fast_step(a, p, i, j, r)
            _fast_step(b, p_tilde, i, j, r)
            if a[0] < b[0] or a[0] + a[2] < b[0] + b[2]:
                final = (Configuration(*a), Configuration(*b))
                return MonotoneReport(False, t, final, t)
    return MonotoneReport(True, None, (Configuration(*a), Configuration(*b)), steps)


# Count indices, matching the sorted labeling: Opinion 1, undecided, Opinion 2.
_X1, _X2, _U = 0, 1, 2


def _label_kind(counts, label):
    if label < counts[_X1]:
        return _X1
    if label < counts[_X1] + counts[_U]:
        return _U
    return _X2


def _fast_step(counts, p, i, j, r):
    qi = _label_kind(counts, i)
    qj = _label_kind(counts, j)
    if qi == _U:
        if qj != _U:
            counts[_U] -= 1
            counts[qj] += 1
    elif qi != qj and qj != _U:
        # Opinion 2 meeting Opinion 1 always drops; Opinion 1 drops iff r > p.
        if qi == _X2 or r > p:
            counts[qi] -= 1
            counts[_U] += 1


class InteractionCase(NamedTuple):
    initiator: AgentState
    responder: AgentState
    outcomes: frozenset  # possible initiator states afterwards


def interaction_table(p: float = 0.5) -> List[InteractionCase]:
    """Outcome set of every (initiator, responder) pair at stubbornness ``p``."""
    # r = p is the largest draw that keeps Opinion 1, r = 1 drops it when p < 1.
    rs = ([p] if p > 0 else []) + ([1.0] if p < 1 else [])
    return [
        InteractionCase(qi, qj, frozenset(transition(qi, qj, r, p) for r in rs))
        for qi, qj in itertools.product(AgentState, repeat=2)
    ]


def interaction_order_violations(
    p_grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    r_grid: Sequence[float] = (1e-9, 0.1, 0.25, 0.3, 0.5, 0.75, 0.9, 1.0),
) -> List[tuple]:
    """Exhaustive one-interaction monotonicity check.

    For every pair of better-or-equal (initiator, responder) inputs, every
    ``p >= p_tilde`` on ``p_grid`` and every shared ``r``, the outcome for
    the better inputs under ``p`` must dominate the other one under
    ``p_tilde``.  Returns the offending cases (empty when monotone).
    """
    bad = []
    states = list(AgentState)
    for qi, qj, qi2, qj2 in itertools.product(states, repeat=4):
        if not (state_geq(qi, qi2) and state_geq(qj, qj2)):
            continue
        for p, p2 in itertools.product(p_grid, repeat=2):
            if p < p2:
                continue
            for r in r_grid:
                hi = transition(qi, qj, r, p)
                lo = transition(qi2, qj2, r, p2)
                if not state_geq(hi, lo):
                    bad.append((qi, qj, qi2, qj2, p, p2, r))
    return bad


def random_instance(n: int, rng) -> Tuple[Configuration, float, Configuration, float]:
    """Random ``(c, p, c_tilde, p_tilde)`` with ``p >= p_tilde`` and ``c`` dominating."""
    cuts = sorted((rng.integers(n + 1), rng.integers(n + 1)))
    low = Configuration(cuts[0], n - cuts[1], cuts[1] - cuts[0])
    x1 = low.x1 + rng.integers(n - low.x1 + 1)
    u_min = max(0, low.x1 + low.u - x1)
    u = u_min + rng.integers(n - x1 - u_min + 1)
    high = Configuration(x1, n - x1 - u, u)
    p_tilde = rng.random()
    p = p_tilde + (1.0 - p_tilde) * rng.random()
    return high, p, low, p_tilde
