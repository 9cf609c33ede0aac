"""Compiled inner loops for accelerated trials.

One productive step draws two uniforms on (0, 1] from the trial's xoshiro
stream (skip length first, category second) and uses the same arithmetic as
:func:`stubborn_usd.core.sample_productive_step`.
"""

import math

import numba as nb
import numpy as np

from .rng import next_uniform, seed_state

RUNNING = 0
WINNER1 = 1
WINNER2 = 2
FROZEN = 3
TIMEOUT = 4
BUFFER_FULL = 5

# Float skips above this are treated as "past any horizon".
_SKIP_CAP = 2.0**62


@nb.njit(cache=True, nogil=True)
def _terminal(x1, x2, u):
    n = x1 + x2 + u
    if x1 == n:
        return WINNER1
    if x2 == n:
        return WINNER2
    if u == n:
        return FROZEN
    return RUNNING


@nb.njit(cache=True, nogil=True)
def advance(state, rng, p, pairs, max_interactions, stride, next_record, buf, buf_len):
    """Run productive steps until the trial ends or the buffer is full.

    ``state`` is ``[x1, x2, u, clock]`` (int64), ``rng`` the uint64[4]
    stream state; both are updated in place.  Every multiple of ``stride``
    on the clock is written to ``buf`` as ``(t, x1, x2, u)`` (``stride=0``
    disables recording).  A step that would overflow ``buf`` is rolled back
    and ``BUFFER_FULL`` returned; call again with a larger buffer.

    Returns ``(status, next_record, buf_len)``.
    """
    x1 = state[0]
    x2 = state[1]
    u = state[2]
    clock = state[3]
    cap = buf.shape[0]
    saved = np.empty(4, dtype=np.uint64)
    status = RUNNING
    while True:
        status = _terminal(x1, x2, u)
        if status != RUNNING:
            break
        for k in range(4):
            saved[k] = rng[k]
        x1x2 = x1 * x2
        w0 = (1.0 - p) * x1x2
        w1 = float(x1x2)
        w2 = float(u * x1)
        w3 = float(u * x2)
        total = (2.0 - p) * x1x2 + u * (x1 + x2)
        q = total / pairs
        r_skip = next_uniform(rng)
        if q >= 1.0:
            skip = 1.0
        else:
            skip = math.ceil(math.log(r_skip) / math.log1p(-q))
            if skip < 1.0:
                skip = 1.0
        timed_out = skip > _SKIP_CAP or clock + int(skip) > max_interactions
        if timed_out:
            until = max_interactions
        else:
            until = clock + int(skip) - 1
        if stride > 0 and next_record <= until:
            needed = (until - next_record) // stride + 1
            if buf_len + needed > cap:
                for k in range(4):
                    rng[k] = saved[k]
                status = BUFFER_FULL
                break
            while next_record <= until:
                buf[buf_len, 0] = next_record
                buf[buf_len, 1] = x1
                buf[buf_len, 2] = x2
                buf[buf_len, 3] = u
                buf_len += 1
                next_record += stride
        if timed_out:
            clock = max_interactions
            status = TIMEOUT
            break
        clock += int(skip)
        target = next_uniform(rng) * (w0 + w1 + w2 + w3)
        # Fixed cumulative order; zero-weight categories are never chosen.
        acc = 0.0
        cat = -1
        if w0 > 0.0:
            acc += w0
            cat = 0
        if not (cat >= 0 and target <= acc) and w1 > 0.0:
            acc += w1
            cat = 1
        if not (cat >= 0 and target <= acc) and w2 > 0.0:
            acc += w2
            cat = 2
        if not (cat >= 0 and target <= acc) and w3 > 0.0:
            acc += w3
            cat = 3
        if cat == 0:
            x1 -= 1
            u += 1
        elif cat == 1:
            x2 -= 1
            u += 1
        elif cat == 2:
            x1 += 1
            u -= 1
        else:
            x2 += 1
            u -= 1
    state[0] = x1
    state[1] = x2
    state[2] = u
    state[3] = clock
    return status, next_record, buf_len


@nb.njit(cache=True, nogil=True)
def run_range(x1, x2, u, p, pairs, max_interactions, seed, first, last, out):
    """Run trials ``first..last-1`` without recording.

    Row ``i - first`` of ``out`` receives ``(status, clock, x1, x2, u)``.
    """
    state = np.empty(4, dtype=np.int64)
    rng = np.empty(4, dtype=np.uint64)
    buf = np.empty((1, 4), dtype=np.int64)
    for i in range(first, last):
        state[0] = x1
        state[1] = x2
        state[2] = u
        state[3] = 0
        seed_state(np.uint64(seed), np.uint64(i), rng)
        status, _, _ = advance(state, rng, p, pairs, max_interactions, 0, 0, buf, 0)
        row = i - first
        out[row, 0] = status
        out[row, 1] = state[3]
        out[row, 2] = state[0]
        out[row, 3] = state[1]
        out[row, 4] = state[2]
