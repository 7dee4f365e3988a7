"""Deterministic random-stream derivation for replicated experiments.

Every stochastic routine in the package draws from a generator derived
from an integer seed plus an index path, so any replicate (or bootstrap
resample) is reproducible in isolation and results never depend on
execution order.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator identified by ``(seed, *path)``.

    Streams with distinct paths are statistically independent.
    ``substream(seed, b)`` equals ``spawn_streams(seed, n)[b]`` for b < n.
    """
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(p) for p in path)
    )
    return np.random.Generator(np.random.PCG64(ss))


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Generators for indices 0..count-1 under the same derivation scheme."""
    parent = np.random.SeedSequence(entropy=int(seed))
    return [np.random.Generator(np.random.PCG64(c)) for c in parent.spawn(count)]
