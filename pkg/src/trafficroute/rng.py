"""Deterministic, platform-independent random numbers.

Everything random in the package is derived from SplitMix64.  Two access
patterns are provided:

* :func:`counter_u64` is counter based: draw ``i`` of stream ``seed`` is
  ``mix64(key(seed) + (i + 1) * GAMMA)``, so any draw can be computed
  independently of the others (and vectorised with numpy).
* :class:`SplitMix64` is the sequential form of the same generator, used
  for sampling without replacement and city generation.

Named sub-streams (``"trials"``, ``"scenario"``, ``"city"``) are derived from
a master seed with :func:`substream_seed`.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_STREAM_TAG = 0x5452414646494321  # arbitrary fixed tag, separates key from raw seed

#: number of bits in a uniform draw, ``u = (z >> 11) / 2**53``
UNIFORM_BITS = 53


def mix64(x: int) -> int:
    """SplitMix64 output finaliser on a Python int."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=np.uint64, copy=True)
    with np.errstate(over="ignore"):
        x ^= x >> np.uint64(30)
        x *= np.uint64(_M1)
        x ^= x >> np.uint64(27)
        x *= np.uint64(_M2)
        x ^= x >> np.uint64(31)
    return x


def stream_key(seed: int) -> int:
    return mix64((seed & MASK64) ^ _STREAM_TAG)


def counter_u64(seed: int, index: np.ndarray | int) -> np.ndarray:
    """Draws ``index`` (0-based) of the counter-based stream ``seed``."""
    idx = np.asarray(index, dtype=np.uint64)
    key = np.uint64(stream_key(seed))
    with np.errstate(over="ignore"):
        x = key + (idx + np.uint64(1)) * np.uint64(GAMMA)
    return _mix64_array(x)


def counter_bits53(seed: int, index: np.ndarray | int) -> np.ndarray:
    """53-bit integers; divide by ``2**53`` for a uniform in [0, 1)."""
    return counter_u64(seed, index) >> np.uint64(64 - UNIFORM_BITS)


def substream_seed(master: int, name: str) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return mix64((master & MASK64) ^ int.from_bytes(digest, "little"))


class SplitMix64:
    """Sequential SplitMix64 generator."""

    def __init__(self, seed: int):
        self.state = stream_key(seed)

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randbelow(self, n: int) -> int:
        """Unbiased integer in ``[0, n)`` by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def sample(self, population: list, k: int) -> list:
        """``k`` distinct items, in draw order (partial Fisher-Yates)."""
        if k > len(population):
            raise ValueError("sample larger than population")
        pool = list(population)
        n = len(pool)
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
