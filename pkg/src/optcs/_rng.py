"""Deterministic random-stream derivation.

Every source of randomness in the library is a named substream of a master
seed, derived through ``numpy.random.SeedSequence`` spawn keys.  Results are
therefore independent of scheduling and worker count.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``(master_seed, *key)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)


def as_generator(rng: int | np.random.Generator | None) -> np.random.Generator:
    """Coerce a seed (or ``None``) into a Generator; pass Generators through."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
