"""Deterministic random streams.

Replicate ``r`` under master seed ``s`` always sees the same thresholds: it
is row ``r % BLOCK`` of block ``r // BLOCK``, and block ``b`` is drawn from
``PCG64(SeedSequence(s, spawn_key=(purpose, b)))``.  Rows are drawn in C
order so a partial block is a prefix of the full one.  Nothing depends on
how many replicates are requested in total or how blocks are scheduled.
"""

from __future__ import annotations

import numpy as np

BLOCK = 1 << 14

THRESHOLDS = 0
SIMULATION = 1
SELECTION = 2


def generator(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=tuple(key))))


def uniform_open_closed(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws on (0, 1]."""
    return 1.0 - rng.random(shape)


def threshold_block(master_seed: int, block: int, rows: int, n: int) -> np.ndarray:
    return uniform_open_closed(generator(master_seed, THRESHOLDS, block), (rows, n))


def block_sizes(replicates: int) -> list[int]:
    full, rest = divmod(replicates, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def replicate_thresholds(master_seed: int, replicate: int, n: int) -> np.ndarray:
    """Thresholds of a single replicate, identical to its row in a batch."""
    b, r = divmod(replicate, BLOCK)
    return threshold_block(master_seed, b, r + 1, n)[r]
