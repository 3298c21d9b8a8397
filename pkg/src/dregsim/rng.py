# Deterministic derivation of independent random streams for Monte Carlo
# replication.  Every (seed, key) pair maps to one fixed stream, so replicates
# and nodes can be simulated in any order (or concurrently) with identical
# results.

from __future__ import annotations

import numpy as np

SeedLike = "int | np.random.SeedSequence | None"


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int (or None, or an existing SeedSequence) to a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_sequence(seed, *key: int) -> np.random.SeedSequence:
    """Stateless child stream: the same (seed, key) always yields the same stream.

    Equivalent to repeated ``SeedSequence.spawn`` but without mutable spawn
    counters, so derivation does not depend on call order.
    """
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(entropy=ss.entropy, spawn_key=ss.spawn_key + tuple(key))


def generator(seed, *key: int) -> np.random.Generator:
    """PCG64 generator on the (seed, key) stream."""
    ss = child_sequence(seed, *key) if key else as_seed_sequence(seed)
    return np.random.default_rng(ss)
