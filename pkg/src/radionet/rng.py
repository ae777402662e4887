"""Deterministic, counter-based randomness for simulation runs.

Every random decision in a run is a pure function of
``(master seed, trial, purpose tag, round, node)``.  This makes runs exactly
reproducible and means that adding instrumentation, reordering node loops or
skipping provably idle rounds never perturbs any outcome.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import _kernels as K

# SplitMix64 / golden-ratio mixing constants (shared with the kernels).
_PHI = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer over 64-bit integers."""
    z = (z + _PHI) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def purpose_id(label: str) -> int:
    """Stable 64-bit tag for a named randomness purpose."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class Stream:
    """A keyed randomness stream for a single simulation run.

    Draws are addressed, never sequential: :meth:`uniforms` returns the draw
    of every node for a given (purpose, round) pair in one array, so the
    result is independent of node iteration order.
    """

    __slots__ = ("key",)

    def __init__(self, key: int):
        self.key = key & _MASK

    def derive(self, label: str) -> "Stream":
        return Stream(mix64(self.key ^ purpose_id(label)))

    def uniforms(self, purpose: int, index: int, n: int) -> np.ndarray:
        """Uniform [0,1) draw for nodes 0..n-1 at (purpose, index)."""
        return K.keyed_uniforms(self.key, purpose, index, n)

    def uniform(self, purpose: int, index: int, node: int) -> float:
        h = mix64(self.key ^ mix64((purpose ^ (index * 0xD1342543DE82EF95)) & _MASK))
        x = mix64((h ^ ((node * 0x2545F4914F6CDD1D) & _MASK)) & _MASK)
        return (x >> 11) * (2.0**-53)

    def u64s(self, purpose: int, index: int, n: int) -> np.ndarray:
        return K.keyed_u64(self.key, purpose, index, n)

    def bits(self, purpose: int, index: int, node: int, nbits: int) -> int:
        """An nbits-wide random integer for one node (used for IDs)."""
        out = 0
        for w in range((nbits + 63) // 64):
            h = mix64(self.key ^ mix64((purpose ^ ((index * 4 + w) * 0xD1342543DE82EF95)) & _MASK))
            x = mix64((h ^ ((node * 0x2545F4914F6CDD1D) & _MASK)) & _MASK)
            out |= x << (64 * w)
        return out & ((1 << nbits) - 1)


class RandomSource:
    """Master seed plus per-trial stream derivation."""

    __slots__ = ("master_seed",)

    def __init__(self, master_seed: int):
        self.master_seed = master_seed & _MASK

    def trial_stream(self, trial: int) -> Stream:
        return Stream(mix64(self.master_seed ^ mix64(trial * 0xA0761D6478BD642F)))
