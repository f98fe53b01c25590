"""SplitMix64 streams used for reproducible lattice filling.

The generator is tiny and fully specified, so any other implementation can
reproduce trial ``k`` of a run bit for bit.
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> int:
    """Output of one SplitMix64 step from ``state``."""
    return mix64((state + GOLDEN) & MASK64)


def trial_seed(master_seed: int, trial_index: int) -> int:
    if not 0 <= master_seed <= MASK64:
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    if trial_index < 0:
        raise ValueError(f"trial_index must be non-negative, got {trial_index}")
    return splitmix64_next(master_seed ^ ((trial_index * GOLDEN) & MASK64))


def splitmix64_stream(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of a SplitMix64 generator seeded with ``seed``."""
    with np.errstate(over="ignore"):
        k = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed) + k * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, count: int) -> np.ndarray:
    """Uniform doubles in [0, 1) built from the top 53 bits of each output."""
    return (splitmix64_stream(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
