"""Counter-based random streams (Philox4x64-10).

Every replay owns one stream keyed by ``(master_seed, stream_index)``.  The
variate sequence is bit-identical to
``numpy.random.Generator(numpy.random.Philox(key=[master_seed, stream_index])).random()``,
which the test-suite uses as an independent reference.

The stream state lives in a small ``uint64`` array so the numba kernels can
draw from it without touching Python objects.  Layout::

    [key0, key1, counter, buf0, buf1, buf2, buf3, buffer_pos]

Only the lowest counter word is ever advanced; 2**64 blocks per stream is far
beyond any replay.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ALGORITHM_ID = "philox4x64-10/numpy-compatible"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0

STATE_SIZE = 8
_MASK64 = (1 << 64) - 1


@njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _LO32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    return hi, a * b


@njit(cache=True)
def _refill(state):
    state[2] += _ONE
    c0 = state[2]
    c1 = np.uint64(0)
    c2 = np.uint64(0)
    c3 = np.uint64(0)
    k0 = state[0]
    k1 = state[1]
    for rnd in range(10):
        if rnd > 0:
            k0 += _W0
            k1 += _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    state[3] = c0
    state[4] = c1
    state[5] = c2
    state[6] = c3
    state[7] = np.uint64(0)


@njit(cache=True)
def next_uint64(state):
    if state[7] >= np.uint64(4):
        _refill(state)
    pos = state[7]
    state[7] = pos + _ONE
    return state[3 + np.int64(pos)]


@njit(cache=True)
def next_double(state):
    """Uniform variate on [0, 1) with 53 random bits."""
    return np.float64(next_uint64(state) >> _S11) * _TWO_M53


@njit(cache=True)
def next_below(state, n):
    """Integer uniform on ``0..n-1`` from one variate (bias below 2**-45)."""
    k = np.int64(next_double(state) * n)
    if k >= n:
        k = n - 1
    return k


@njit(cache=True)
def seed_state(state, master_seed, stream_index):
    state[0] = master_seed
    state[1] = stream_index
    state[2] = np.uint64(0)
    state[7] = np.uint64(4)


def new_state(master_seed: int, stream_index: int) -> np.ndarray:
    if stream_index < 0:
        raise ValueError("stream_index must be non-negative")
    state = np.zeros(STATE_SIZE, dtype=np.uint64)
    seed_state(state, np.uint64(master_seed & _MASK64), np.uint64(stream_index & _MASK64))
    return state


class RngStream:
    """One independent variate stream, a pure function of its two indices."""

    def __init__(self, master_seed: int, stream_index: int = 0):
        for v in (master_seed, stream_index):
            if not 0 <= int(v) <= _MASK64:
                raise ValueError(f"seed and stream index must fit in 64 unsigned bits, got {v}")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self.state = new_state(self.master_seed, self.stream_index)

    def random(self) -> float:
        return float(next_double(self.state))

    def uint64(self) -> int:
        return int(next_uint64(self.state))

    def below(self, n: int) -> int:
        if n < 1:
            raise ValueError("below(n) needs n >= 1")
        return int(next_below(self.state, n))

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"
