"""SplitMix64 stream shared bit-for-bit by both forest backends.

Per-tree child seeds and per-node feature subsets must not depend on which
backend (compiled or pure Python) is active, so the generator is spelled out
here instead of borrowing an opaque library stream. The compiled kernel
carries the same constants in C.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


class SplitMix64:
    """Minimal deterministic uint64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return mix64(self.state)


def derive_child_seed(master_seed: int, index: int) -> int:
    """Deterministic child seed for tree `index` (or any sub-stream)."""
    return mix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


def shuffled_feature_order(rng: SplitMix64, n_features: int) -> list[int]:
    """Fisher-Yates permutation driven by the shared stream.

    Mirrors the kernel exactly: swaps run from the top index down, picking
    `next_u64() % (i + 1)`.
    """
    perm = list(range(n_features))
    for i in range(n_features - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm
