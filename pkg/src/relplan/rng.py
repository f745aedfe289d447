"""Counter-based random streams.

Every random decision in generation is drawn from a Philox stream keyed by
(root seed, problem index, purpose tag), so generating problem k never
depends on how many problems were generated before it or on which worker
generated it.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def stream(seed: int, index: int, tag: str) -> np.random.Generator:
    """Independent generator for one (seed, problem index, purpose) triple."""
    key = np.array([(seed ^ _tag_hash(tag)) & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
