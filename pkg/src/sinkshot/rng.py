"""Deterministic, portable randomness.

Every random draw in this package comes from SplitMix64, a 64-bit generator
whose integer algorithm is exactly specified, so seeded runs replay across
processes and platforms. Continuous variates are derived from the raw stream
with fixed recipes: Box-Muller for Gaussians, inverse-CDF for exponentials.

The stream seeded with ``seed`` is the sequence ``mix64(seed + (i+1)*GAMMA)``
for i = 0, 1, 2, ...; ``bulk_*`` functions evaluate a slice of that sequence
vectorized, and :func:`derive_seed` reuses it as a seed-splitting hash.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 53-bit mantissa scaling for uniforms in [0, 1)
_INV_2_53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanching bijection on 64-bit integers."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Derive the sub-seed for stream ``index`` from a master seed.

    Equal to the ``index``-th raw output of SplitMix64 seeded with ``master``,
    which makes every derived stream individually replayable.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    return mix64((master + (index + 1) * GAMMA) & _MASK)


class SplitMix64:
    """Scalar SplitMix64 stream with draw helpers.

    ``uniform`` returns 53-bit floats in [0, 1); ``normal`` consumes two raw
    outputs per variate (Box-Muller, cosine branch); ``exponential`` is
    ``-log(u)`` with u in (0, 1].
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & _MASK
        return mix64(self._state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def normal(self) -> float:
        u1 = ((self.next_u64() >> 11) + 1) * _INV_2_53  # (0, 1]
        u2 = (self.next_u64() >> 11) * _INV_2_53
        return float(np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2))

    def exponential(self) -> float:
        u = ((self.next_u64() >> 11) + 1) * _INV_2_53
        return float(-np.log(u))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias (rejection sampling)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choose(self, n: int, k: int) -> np.ndarray:
        """k distinct indices drawn uniformly from range(n), in draw order.

        Partial Fisher-Yates shuffle; consumes one or more raw outputs per
        drawn index.
        """
        if k > n:
            raise ValueError(f"cannot choose {k} from {n}")
        pool = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def bulk_u64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Raw outputs ``offset .. offset+count`` of the SplitMix64 stream, vectorized."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + idx * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def bulk_uniform(seed: int, count: int, offset: int = 0) -> np.ndarray:
    return (bulk_u64(seed, count, offset) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def bulk_normal(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """``count`` Gaussian variates; consumes ``2*count`` raw outputs from ``offset``."""
    raw = bulk_u64(seed, 2 * count, offset)
    u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def bulk_exponential(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """``count`` unit-rate exponential variates; consumes ``count`` raw outputs."""
    raw = bulk_u64(seed, count, offset)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    return -np.log(u)
