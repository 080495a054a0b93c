"""Keyed deterministic random streams.

All keyed randomness in the package comes from :func:`derive_stream`: a
counter-mode SplitMix64 generator whose starting state is
``seed ^ fnv1a64(tag) ^ index``. Output ``k`` (0-based) is
``mix64(state + (k + 1) * GOLDEN)``, so any block of outputs can be
computed without iterating, and batches of indices vectorize.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: str | bytes) -> int:
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _seed_of(key) -> int:
    seed = getattr(key, "seed", key)
    return int(seed) & MASK64


def stream_block(key, tag: str, indices, n: int, offset: int = 0) -> np.ndarray:
    """Outputs ``offset .. offset+n-1`` of the streams for every index.

    Returns a ``uint64`` array of shape ``(len(indices), n)``; row ``r`` equals
    ``derive_stream(key, tag, indices[r])`` drawn ``n`` times after skipping
    ``offset`` outputs.
    """
    base = _seed_of(key) ^ fnv1a64(tag)
    idx = np.asarray(indices, dtype=np.uint64).reshape(-1, 1)
    states = np.uint64(base) ^ idx
    steps = np.arange(offset + 1, offset + n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
    return _mix64(states + steps[None, :])


def u64_to_chips(raw: np.ndarray) -> np.ndarray:
    """Map raw outputs to +/-1 by their top bit (set -> -1)."""
    return (1 - 2 * (raw >> np.uint64(63)).astype(np.int8)).astype(np.int8)


def u64_to_unit(raw: np.ndarray) -> np.ndarray:
    """Map raw outputs to doubles in [0, 1) using the top 53 bits."""
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


class KeyStream:
    """Sequential view of one derived stream."""

    def __init__(self, key, tag: str, index: int = 0):
        self.seed = _seed_of(key)
        self.tag = tag
        self.index = int(index) & MASK64
        self.position = 0

    def u64(self, n: int) -> np.ndarray:
        out = stream_block(self.seed, self.tag, [self.index], n, self.position)[0]
        self.position += n
        return out

    def next_int(self) -> int:
        return int(self.u64(1)[0])

    def chips(self, n: int) -> np.ndarray:
        return u64_to_chips(self.u64(n))

    def uniform(self, n: int) -> np.ndarray:
        return u64_to_unit(self.u64(n))

    def integers(self, n: int, bound: int) -> np.ndarray:
        return (self.u64(n) % np.uint64(bound)).astype(np.int64)

    def normal(self, n: int) -> np.ndarray:
        """Standard normal draws via Box-Muller (two uniforms per pair)."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        return z.reshape(-1)[:n]


def derive_stream(key, domain_tag: str, index: int = 0) -> KeyStream:
    """Deterministic stream fully determined by ``(seed, domain_tag, index)``."""
    return KeyStream(key, domain_tag, index)


def derive_seed(key, domain_tag: str, index: int = 0) -> int:
    """First output of a derived stream, for use as a child seed."""
    return derive_stream(key, domain_tag, index).next_int()
