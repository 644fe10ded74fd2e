"""Deterministic derivation of independent random streams.

Every stochastic object in the package draws from a numpy PCG64 generator
whose SeedSequence is keyed by (master seed, kind, indices...).  Streams are
therefore reproducible bit-for-bit and independent of worker scheduling:
a replication's results depend only on its key, never on which process ran
it or in what order.
"""

from __future__ import annotations

import numpy as np

# spawn-key kinds; keep stable, they are part of the reproducibility contract
VERTEX = 0
EDGE = 1
REPLICATION = 2
SHARD = 3
CHAIN = 4
SCREEN = 5


def seed_sequence(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(k) for k in key))


def stream(master: int, *key: int) -> np.random.Generator:
    """Generator for the sub-stream identified by ``key`` under ``master``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master, *key)))


def derive_seed(master: int, *key: int) -> int:
    """A 64-bit integer seed derived from (master, key); used to hand a whole
    simulation (which derives its own vertex/edge streams) to a replication."""
    return int(seed_sequence(master, *key).generate_state(1, np.uint64)[0])
