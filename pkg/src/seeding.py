"""
seeding.py - Derived random streams

Every random quantity in the package is drawn from an explicit integer seed.
Independent streams are derived from a base seed and a key path through
numpy's SeedSequence, so that adding a stream never shifts another one.
"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _entropy(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & 0xFFFFFFFFFFFFFFFF


def derive_seed(base: int, *keys: Key) -> int:
    """64-bit seed for the stream identified by (base, *keys)."""
    sequence = np.random.SeedSequence([_entropy(base)] + [_entropy(k) for k in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
