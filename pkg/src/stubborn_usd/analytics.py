"""Potential functions and their exact one-step drifts.

All drifts assume the ``self_pairs=True`` scheduler (``n**2`` denominators).
Each closed form is paired with :func:`expected_change`, which computes the
same quantity by summing over :func:`~stubborn_usd.core.step_distribution`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

from .core import Configuration, ProtocolParams, step_distribution

__all__ = [
    "PotentialReport",
    "SubmartingaleTracker",
    "weighted_bias",
    "threshold",
    "potentials",
    "drift_weighted_bias",
    "drift_weighted_bias_squared",
    "drift_gap",
    "drift_phi_up",
    "default_r",
    "expected_change",
    "DRIFT_IDENTITIES",
    "drift_discrepancies",
]


def _check_params(params: Optional[ProtocolParams]) -> None:
    if params is not None and not params.self_pairs:
        raise ValueError("drift formulas are only exact for the self_pairs=True scheduler")


def weighted_bias(c: Configuration, p: float) -> float:
    """``x1 - (1-p) x2``."""
    return c.x1 - (1.0 - p) * c.x2


def threshold(c: Configuration) -> Optional[float]:
    """Stubbornness ``1 - x1/x2`` at which the weighted bias vanishes."""
    if c.x2 == 0:
        return None
    return 1.0 - c.x1 / c.x2


@dataclass(frozen=True)
class PotentialReport:
    weighted_bias: float
    negative_weighted_bias: float
    threshold: Optional[float]
    gap_inverse: Optional[float]
    gap: Optional[float]
    undecided_surplus: int


def potentials(c: Configuration, p: float) -> PotentialReport:
    """Evaluate every potential at ``c``.  Undefined ones are ``None``."""
    dw = weighted_bias(c, p)
    return PotentialReport(
        weighted_bias=dw,
        negative_weighted_bias=-dw,
        threshold=threshold(c),
        gap_inverse=c.x2 / c.x1 if c.x1 else None,
        gap=c.x1 / c.x2 if c.x2 else None,
        undecided_surplus=c.u - c.x1 - c.x2,
    )


def drift_weighted_bias(c: Configuration, p: float, params: Optional[ProtocolParams] = None) -> float:
    """E[dw(t+1) - dw(t) | F_t] = u * dw / n**2."""
    _check_params(params)
    return c.u * weighted_bias(c, p) / c.n**2


def drift_weighted_bias_squared(
    c: Configuration, p: float, params: Optional[ProtocolParams] = None
) -> float:
    """E[dw(t+1)**2 | F_t] - dw(t)**2."""
    _check_params(params)
    n2 = c.n**2
    dw = weighted_bias(c, p)
    q = 1.0 - p
    return (
        c.x1 * c.x2 / n2 * (2.0 - p) * q
        + 2.0 * c.u * dw * dw / n2
        + c.u / n2 * (c.x1 + q * q * c.x2)
    )


def drift_gap(
    c: Configuration, p: float, winner: int = 1, params: Optional[ProtocolParams] = None
) -> float:
    """Expected one-step change of the losing-to-winning ratio.

    For ``winner=1`` the potential is ``x2/x1``, for ``winner=2`` it is
    ``x1/x2``; both are driven to zero when the respective opinion wins.
    """
    _check_params(params)
    x1, x2, u = c.x1, c.x2, c.u
    n2 = c.n**2
    q = 1.0 - p
    if winner == 1:
        if x1 < 2 or x2 < 1:
            raise ValueError(f"drift_gap(winner=1) needs x1 >= 2 and x2 >= 1, got {c}")
        psi = x2 / x1
        return -psi / n2 * (x1 - q * x2 - q * x2 / (x1 - 1) - u / (x1 + 1))
    if winner == 2:
        if x2 < 2 or x1 < 1:
            raise ValueError(f"drift_gap(winner=2) needs x2 >= 2 and x1 >= 1, got {c}")
        psi = x1 / x2
        return -psi / n2 * (q * x2 - x1 - x1 / (x2 - 1) - u / (x2 + 1))
    raise ValueError(f"winner must be 1 or 2, got {winner!r}")


def drift_phi_up(
    c: Configuration, p: float, params: Optional[ProtocolParams] = None
) -> Tuple[float, float]:
    """Probabilities that ``u - x1 - x2`` moves by +2 and by -2."""
    _check_params(params)
    n2 = c.n**2
    return (2.0 - p) * c.x1 * c.x2 / n2, c.u * (c.x1 + c.x2) / n2


def default_r(c0: Configuration, p: float) -> float:
    """Heuristic drift constant ``x1 (1-p) x2 / n**2`` for the tracker.

    Only the existence of some constant of this order is needed for the
    squared-bias process to be a submartingale; this picks the value at the
    initial configuration.
    """
    return c0.x1 * (1.0 - p) * c0.x2 / c0.n**2


class SubmartingaleTracker:
    """Tracks ``y = dw(t)**2 - r*t`` along a trajectory."""

    def __init__(self, r: float, c0: Configuration, p: float, t0: int = 0):
        self.r = float(r)
        self.p = p
        self.t = t0
        self.y = weighted_bias(c0, p) ** 2 - self.r * t0

    def update(self, c: Configuration, t: int) -> float:
        if t < self.t:
            raise ValueError(f"time went backwards: {t} < {self.t}")
        self.t = t
        self.y = weighted_bias(c, self.p) ** 2 - self.r * t
        return self.y

    @property
    def squared_bias(self) -> float:
        return self.y + self.r * self.t


def expected_change(
    c: Configuration, params: ProtocolParams, f: Callable[[Configuration], float]
) -> float:
    """E[f(next) - f(c)] by summation over the exact one-step law."""
    base = f(c)
    return sum(prob * (f(nxt) - base) for nxt, prob in step_distribution(c, params))


def _phi_up_step_probs(c: Configuration, params: ProtocolParams) -> Tuple[float, float]:
    up = down = 0.0
    base = c.u - c.x1 - c.x2
    for nxt, prob in step_distribution(c, params):
        delta = (nxt.u - nxt.x1 - nxt.x2) - base
        if delta == 2:
            up += prob
        elif delta == -2:
            down += prob
    return up, down


DRIFT_IDENTITIES = (
    "weighted_bias",
    "weighted_bias_squared",
    "gap_winner1",
    "gap_winner2",
    "phi_up_plus",
    "phi_up_minus",
)


def drift_discrepancies(n_max: int, p_grid: Sequence[float], n_min: int = 2) -> Dict[str, float]:
    """Largest |closed form - enumeration| per identity over all small configurations.

    Scans every configuration with ``n_min <= n <= n_max`` and every ``p`` in
    ``p_grid``; gap drifts are only compared where they are defined.
    """
    worst = {name: 0.0 for name in DRIFT_IDENTITIES}

    def note(name: str, closed: float, enumerated: float) -> None:
        worst[name] = max(worst[name], abs(closed - enumerated))

    for n in range(n_min, n_max + 1):
        for x1 in range(n + 1):
            for x2 in range(n - x1 + 1):
                c = Configuration(x1, x2, n - x1 - x2)
                for p in p_grid:
                    params = ProtocolParams(p)
                    note("weighted_bias", drift_weighted_bias(c, p),
                         expected_change(c, params, lambda d: weighted_bias(d, p)))
                    note("weighted_bias_squared", drift_weighted_bias_squared(c, p),
                         expected_change(c, params, lambda d: weighted_bias(d, p) ** 2))
                    if x1 >= 2 and x2 >= 1:
                        note("gap_winner1", drift_gap(c, p, 1),
                             expected_change(c, params, lambda d: d.x2 / d.x1))
                    if x2 >= 2 and x1 >= 1:
                        note("gap_winner2", drift_gap(c, p, 2),
                             expected_change(c, params, lambda d: d.x1 / d.x2))
                    plus, minus = drift_phi_up(c, p)
                    up, down = _phi_up_step_probs(c, params)
                    note("phi_up_plus", plus, up)
                    note("phi_up_minus", minus, down)
    return worst
