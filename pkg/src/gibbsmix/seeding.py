"""Deterministic replica seeding.

Every experiment derives one independent stream per replica as
Generator(SeedSequence([base_seed, replica_index])). Distinct replicas never
share a stream, and a (seed, replica) pair always reproduces the same draws.
"""

from __future__ import annotations

import numpy as np

__all__ = ["replica_rng", "replica_seed_words"]


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def replica_seed_words(seed: int, replicas: int) -> list:
    """First derived 64-bit word per replica, for run manifests."""
    return [
        int(np.random.SeedSequence([int(seed), b]).generate_state(1, np.uint64)[0])
        for b in range(replicas)
    ]
