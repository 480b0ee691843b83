"""Seeded, bit-reproducible random number generation.

Every shuffled, sampled, or noised quantity in this package is driven by a
splitmix64 stream so that runs are reproducible across platforms and so that
the same sequence can be produced scalar-by-scalar or in bulk numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(seed: int, salt: int) -> int:
    """Child seed for a substream (per lot, per chip, ...); salt picks the stream."""
    return _mix((seed + (salt + 1) * _GAMMA) & MASK64)


class SplitMix64:
    """splitmix64 generator with matching scalar and vectorized outputs.

    The n-th output depends only on (seed, n), so bulk draws are computed with
    numpy uint64 arithmetic and agree exactly with repeated `next_u64` calls.
    """

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._count = 0

    def next_u64(self) -> int:
        self._count += 1
        return _mix((self.seed + self._count * _GAMMA) & MASK64)

    def next_u64_array(self, count: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + count + 1, dtype=np.uint64)
        self._count += count
        with np.errstate(over="ignore"):
            z = (np.uint64(self.seed) + np.uint64(_GAMMA) * idx).astype(np.uint64)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            return z ^ (z >> np.uint64(31))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53
        return low + (high - low) * u

    def uniform_array(self, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.next_u64_array(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, sigma: float = 1.0) -> float:
        # Box-Muller; one value per call, the sine branch is discarded.
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normal_array(self, count: int, sigma: float = 1.0) -> np.ndarray:
        pairs = (count + 1) // 2
        u = self.next_u64_array(2 * pairs) >> np.uint64(11)
        u1 = (u[:pairs].astype(np.float64) + 1.0) * 2.0**-53
        u2 = u[pairs:].astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return sigma * out[:count]

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n > 0")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, high index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order given by a partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} from {n}")
        idx = list(range(n))
        for i in range(k):
            j = i + self.randrange(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]
