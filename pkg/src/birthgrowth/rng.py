"""Reproducible random substreams.

Every replication gets its own generator seeded from
``(master_seed, *keys)`` through :class:`numpy.random.SeedSequence`, so a
result depends only on the replication's coordinates, never on which
worker ran it or in what order.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(master_seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([check_seed(master_seed), *map(int, keys)]))
