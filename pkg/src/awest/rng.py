"""Counter-based random streams.

Every stream is a Philox generator whose key is derived from the run seed and
a tuple of integer labels (replication, process step, purpose, ...). Draws for
a given key never depend on how work is scheduled across workers.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    value = int(part)
    if value < 0:
        raise ValueError("stream labels must be non-negative")
    return value


def stream(seed: int, *labels) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *labels)``."""
    ss = np.random.SeedSequence(entropy=_label(seed), spawn_key=tuple(_label(p) for p in labels))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
