"""Portable seeded randomness.

Everything stochastic in the toolkit (synthetic fixtures, k-means++ seeding,
point subsampling) draws from splitmix64, a public 64-bit-state generator, so
the same seed produces the same artifacts on any platform. Gaussians come from
the Box-Muller transform on splitmix64 uniforms.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64: state advances by the golden-gamma, output is mixed."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK
        self._spare_normal = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Uses the floor of n*random()."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return min(int(self.random() * n), n - 1)

    def normal(self) -> float:
        """Standard normal via Box-Muller; the sine partner is cached."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = max(self.random(), 2.0 ** -53)
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, shape) -> np.ndarray:
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        for i in range(out.size):
            out[i] = self.normal()
        return out.reshape(shape)

    def sample_indices(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from [0, n), returned sorted ascending.

        Partial Fisher-Yates; sorting makes k == n the identity, which keeps
        "subsample everything" runs byte-stable.
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + self.randrange(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        out = pool[:k]
        out.sort()
        return out


def hash_string(text: str) -> int:
    """Stable 64-bit hash of a string (FNV-1a), for deriving seeds from names."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h
