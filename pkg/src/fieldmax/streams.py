"""Deterministic per-replication random streams.

Streams are keyed, counter-based Philox generators: replication r of an
experiment with master seed s uses ``Philox(key=(s, r))``. Distinct indices
give statistically independent streams, and the stream for a given index never
depends on how many other replications run, so extending the replication
count leaves every earlier replication's draws untouched.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64


def derive_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent, bit-reproducible stream for (master seed, replication index)."""
    if not 0 <= master_seed < 2**64:
        raise ValueError(f"master seed must fit in 64 bits, got {master_seed}")
    if not 0 <= index < 2**64:
        raise ValueError(f"replication index must fit in 64 bits, got {index}")
    key = np.array([master_seed, index], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))
