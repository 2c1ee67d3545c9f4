"""Seed derivation used everywhere randomness appears.

Counter scheme: the stream for sub-task ``key`` of a run seeded with
``master_seed`` is ``np.random.SeedSequence(master_seed, spawn_key=key)``.
Replicate ``i`` of a Monte Carlo run therefore always sees the same stream
no matter how replicates are scheduled, which is what makes every report a
pure function of (inputs, master_seed).
"""

from __future__ import annotations

import numpy as np

Seed = "int | np.random.SeedSequence"


def substream(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Seed sequence for the sub-task identified by the integer tuple `key`."""
    return np.random.SeedSequence(master_seed, spawn_key=key)


def rng_for(master_seed: int, *key: int) -> np.random.Generator:
    """Fresh generator for sub-task `key` of a run seeded with `master_seed`."""
    return np.random.default_rng(substream(master_seed, *key))


def as_generator(seed) -> np.random.Generator:
    """Accept an int, SeedSequence, or Generator and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
