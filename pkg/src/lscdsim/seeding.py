"""Counter-based stream derivation: every random stream is a pure function of
``(seed, purpose, job, replication)``.

Streams of existing replications never depend on how many replications are
requested, so raising ``reps`` only appends work.
"""
from __future__ import annotations

import numpy as np

# purposes keep unrelated jobs on disjoint streams
RUN = 1
CYCLES = 2
ASCENT = 3
WADD = 4
SWEEP_ARL = 5
SWEEP_STATS = 6

MASK64 = (1 << 64) - 1


def generator(seed: int, *key: int) -> np.random.Generator:
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


def gamma_key(gamma: float) -> int:
    """Integer key for a threshold value (micro-unit resolution)."""
    return int(round(gamma * 1_000_000))
