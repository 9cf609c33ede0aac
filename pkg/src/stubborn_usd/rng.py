"""Per-trial random streams: xoshiro256** seeded through SplitMix64.

Trial ``index`` of a run seeded with ``seed`` owns the stream whose 256-bit
state is four consecutive SplitMix64 outputs started from

    key = mix64(mix64(seed) ^ index)

where ``mix64`` is the SplitMix64 output finaliser.  Doubles take the top 53
bits of each output.  Streams depend only on ``(seed, index)``, so any
partition of trials over threads gives identical results.
"""

from __future__ import annotations

import numba as nb
import numpy as np

__all__ = ["Stream", "seed_state", "next_u64", "next_double", "next_uniform", "mix64"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53_INV = 1.0 / 9007199254740992.0


@nb.njit(cache=True, nogil=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit(cache=True, nogil=True)
def seed_state(seed, index, out):
    """Fill ``out`` (uint64[4]) with the xoshiro state of ``(seed, index)``."""
    s = mix64(mix64(np.uint64(seed)) ^ np.uint64(index))
    for k in range(4):
        s = s + _GOLDEN
        out[k] = mix64(s)


@nb.njit(cache=True, nogil=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(cache=True, nogil=True)
def next_double(s):
    """Uniform on [0, 1)."""
    return float(next_u64(s) >> np.uint64(11)) * _TWO53_INV


@nb.njit(cache=True, nogil=True)
def next_uniform(s):
    """Uniform on (0, 1]."""
    return 1.0 - next_double(s)


@nb.njit(cache=True, nogil=True)
def _fill_doubles(s, out):
    for k in range(out.shape[0]):
        out[k] = next_double(s)


class Stream:
    """Python handle on one trial stream.

    Implements the small part of ``numpy.random.Generator`` used by
    :mod:`stubborn_usd.core` (``random`` and ``integers``), drawing from
    exactly the same sequence the compiled engine uses.
    """

    def __init__(self, seed: int, index: int = 0):
        self.state = np.empty(4, dtype=np.uint64)
        seed_state(np.uint64(seed), np.uint64(index), self.state)

    def random(self, size=None):
        if size is None:
            return next_double(self.state)
        out = np.empty(size, dtype=np.float64)
        _fill_doubles(self.state, out)
        return out

    def integers(self, n: int) -> int:
        """Uniform on ``range(n)``."""
        return min(int(next_double(self.state) * n), n - 1)

    def u64(self) -> int:
        return int(next_u64(self.state))
