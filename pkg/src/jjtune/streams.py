"""Deterministic per-entity random streams.

Batch operations must give bit-identical results no matter how the work is
ordered or parallelized. Each entity (junction, site, trace) therefore gets
its own generator, derived from the master seed and a hash of the entity id;
no draw order is shared between entities.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["child_rng"]


def child_rng(master_seed: int, stream_id: str) -> np.random.Generator:
    """Generator for one named stream under a master seed.

    The stream key is the leading words of sha256(stream_id), so the mapping
    is stable across runs, platforms, and iteration order.
    """
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    words = tuple(int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=words))
