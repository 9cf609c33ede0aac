"""Monte Carlo trials to absorption and reproducible batches.

Trial ``i`` of a batch seeded with ``seed`` draws from the xoshiro256**
stream ``(seed, i)`` (see :mod:`stubborn_usd.rng`); a single
:func:`run_trial` uses index 0 unless told otherwise.  Trials are
independent, so batch results do not depend on how trials are spread over
threads.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernel
from .core import Configuration, ProtocolParams
from .rng import seed_state

__all__ = [
    "Outcome",
    "TrialSpec",
    "AbsorptionResult",
    "TrajectoryRecord",
    "OutcomeStats",
    "BatchSummary",
    "default_max_interactions",
    "run_trial",
    "run_trials",
    "run_results",
    "run_batch",
    "summarize",
    "thread_cap",
]

THREADS_ENV = "STUBBORN_USD_THREADS"


class Outcome(str, enum.Enum):
    WINNER1 = "Winner1"
    WINNER2 = "Winner2"
    FROZEN = "Frozen"
    TIMEOUT = "Timeout"


_STATUS_TO_OUTCOME = {
    _kernel.WINNER1: Outcome.WINNER1,
    _kernel.WINNER2: Outcome.WINNER2,
    _kernel.FROZEN: Outcome.FROZEN,
    _kernel.TIMEOUT: Outcome.TIMEOUT,
}


def default_max_interactions(n: int) -> int:
    """``200 n (ln n)**2``, generous for the slowest fast regime."""
    return max(1, math.ceil(200 * n * math.log(n) ** 2))


@dataclass(frozen=True)
class TrialSpec:
    initial: Configuration
    params: ProtocolParams
    seed: int = 0
    max_interactions: Optional[int] = None
    record_stride: int = 0

    def __post_init__(self) -> None:
        if self.max_interactions is None:
            object.__setattr__(self, "max_interactions", default_max_interactions(self.initial.n))
        if self.max_interactions < 1:
            raise ValueError(f"max_interactions must be >= 1, got {self.max_interactions}")
        if self.record_stride < 0:
            raise ValueError(f"record_stride must be >= 0, got {self.record_stride}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class AbsorptionResult:
    outcome: Outcome
    interactions: int
    final: Configuration


@dataclass(frozen=True)
class TrajectoryRecord:
    """Configurations at stride multiples of the clock, plus the end point."""

    times: np.ndarray
    counts: np.ndarray  # shape (len(times), 3): x1, x2, u

    def __len__(self) -> int:
        return len(self.times)

    def points(self) -> List[Tuple[int, Configuration]]:
        return [(int(t), Configuration(*map(int, row))) for t, row in zip(self.times, self.counts)]

    def to_dict(self) -> dict:
        return {"t": self.times.tolist(), "x1": self.counts[:, 0].tolist(),
                "x2": self.counts[:, 1].tolist(), "u": self.counts[:, 2].tolist()}


def run_trial(
    spec: TrialSpec, index: int = 0
) -> Tuple[AbsorptionResult, Optional[TrajectoryRecord]]:
    """Run one trial to absorption, freeze or timeout.

    Uses the stream ``(spec.seed, index)``.  The trajectory is ``None`` when
    ``spec.record_stride == 0``.
    """
    c = spec.initial
    stride = spec.record_stride
    state = np.array([c.x1, c.x2, c.u, 0], dtype=np.int64)
    rng = np.empty(4, dtype=np.uint64)
    seed_state(np.uint64(spec.seed), np.uint64(index), rng)
    pairs = float(spec.params.pair_count(c.n))
    buf = np.empty((256 if stride else 1, 4), dtype=np.int64)
    buf_len = 0
    next_record = 0
    while True:
        status, next_record, buf_len = _kernel.advance(
            state, rng, spec.params.p, pairs, spec.max_interactions,
            stride, next_record, buf, buf_len,
        )
        if status != _kernel.BUFFER_FULL:
            break
        buf = np.concatenate([buf, np.empty_like(buf)])
    final = Configuration(int(state[0]), int(state[1]), int(state[2]))
    clock = int(state[3])
    result = AbsorptionResult(_STATUS_TO_OUTCOME[status], clock, final)
    if not stride:
        return result, None
    rows = buf[:buf_len]
    if buf_len == 0 or rows[-1, 0] != clock:
        rows = np.vstack([rows, [[clock, final.x1, final.x2, final.u]]])
    return result, TrajectoryRecord(times=rows[:, 0].copy(), counts=rows[:, 1:].copy())


def thread_cap(parallelism: int) -> int:
    """Clamp requested parallelism by the environment cap, if set."""
    cap = os.environ.get(THREADS_ENV)
    workers = max(1, int(parallelism))
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def run_trials(
    spec: TrialSpec, trials: int, start: int = 0
) -> List[Tuple[AbsorptionResult, Optional[TrajectoryRecord]]]:
    """Trials ``start..start+trials-1`` with their trajectories, in index order."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    return [run_trial(spec, i) for i in range(start, start + trials)]


def _run_chunk(spec: TrialSpec, first: int, last: int) -> np.ndarray:
    c = spec.initial
    out = np.empty((last - first, 5), dtype=np.int64)
    _kernel.run_range(
        c.x1, c.x2, c.u, spec.params.p, float(spec.params.pair_count(c.n)),
        spec.max_interactions, np.uint64(spec.seed), first, last, out,
    )
    return out


def _results_from_rows(rows: np.ndarray) -> List[AbsorptionResult]:
    return [
        AbsorptionResult(_STATUS_TO_OUTCOME[int(s)], int(t), Configuration(int(a), int(b), int(u)))
        for s, t, a, b, u in rows
    ]


def run_results(
    spec: TrialSpec, trials: int, parallelism: int = 1, start: int = 0
) -> List[AbsorptionResult]:
    """Results of trials ``start..start+trials-1`` (no trajectories), in index order."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    workers = min(thread_cap(parallelism), trials)
    if workers == 1:
        return _results_from_rows(_run_chunk(spec, start, start + trials))
    bounds = start + np.linspace(0, trials, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda k: _run_chunk(spec, bounds[k], bounds[k + 1]), range(workers)))
    return _results_from_rows(np.concatenate(parts))


@dataclass(frozen=True)
class OutcomeStats:
    count: int
    min: int
    median: float
    mean: float
    p95: float
    max: int

    @classmethod
    def from_times(cls, times: Sequence[int]) -> Optional["OutcomeStats"]:
        if len(times) == 0:
            return None
        arr = np.sort(np.asarray(times, dtype=np.int64))
        return cls(
            count=len(arr),
            min=int(arr[0]),
            median=float(np.median(arr)),
            mean=float(arr.mean()),
            p95=float(np.percentile(arr, 95)),
            max=int(arr[-1]),
        )


@dataclass(frozen=True)
class BatchSummary:
    trials: int
    wins1: int
    wins2: int
    frozen: int
    timeouts: int
    times: Dict[Outcome, np.ndarray] = field(repr=False, compare=False)

    def stats(self, outcome: Outcome) -> Optional[OutcomeStats]:
        return OutcomeStats.from_times(self.times[outcome])

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "wins1": self.wins1,
            "wins2": self.wins2,
            "frozen": self.frozen,
            "timeouts": self.timeouts,
            "T": {
                o.value: (None if (s := self.stats(o)) is None else s.__dict__)
                for o in Outcome
            },
        }


def summarize(results: Sequence[AbsorptionResult]) -> BatchSummary:
    times: Dict[Outcome, List[int]] = {o: [] for o in Outcome}
    for r in results:
        times[r.outcome].append(r.interactions)
    return BatchSummary(
        trials=len(results),
        wins1=len(times[Outcome.WINNER1]),
        wins2=len(times[Outcome.WINNER2]),
        frozen=len(times[Outcome.FROZEN]),
        timeouts=len(times[Outcome.TIMEOUT]),
        times={o: np.asarray(v, dtype=np.int64) for o, v in times.items()},
    )


def run_batch(spec: TrialSpec, trials: int, parallelism: int = 1, start: int = 0) -> BatchSummary:
    """Summary of ``trials`` independent trials seeded from ``spec.seed``."""
    return summarize(run_results(spec, trials, parallelism, start))
