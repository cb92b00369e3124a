"""Seed handling shared by every stochastic operation.

Seeds are either an int or a sequence of ints (e.g. ``(seed, shot_index)``);
both go straight into :class:`numpy.random.SeedSequence`, so keying work by
``(seed, shot_index)`` makes results independent of how shots are scheduled.
"""

from typing import Sequence, Union

import numpy as np

Seed = Union[int, Sequence[int], np.random.SeedSequence]


def seed_sequence(seed: Seed) -> np.random.SeedSequence:
    """Normalize a seed into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed))
    return np.random.SeedSequence([int(s) for s in seed])


def make_rng(seed: Seed) -> np.random.Generator:
    """Generator for a single stochastic step."""
    return np.random.default_rng(seed_sequence(seed))


def keyed_rng(seed: Seed, *keys: int) -> np.random.Generator:
    """Generator keyed by ``(seed, *keys)``, e.g. one stream per shot index."""
    base = seed_sequence(seed)
    spawn_key = tuple(base.spawn_key) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(base.entropy, spawn_key=spawn_key))
