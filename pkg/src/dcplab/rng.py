"""Named, seeded random streams.

Every randomized routine takes an explicit numpy Generator.  Streams are
derived from a master seed plus string labels so that independent parts of an
experiment never share or race on a generator.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(master_seed: int, *labels) -> np.random.Generator:
    """Generator for (master_seed, labels); stable across runs and platforms."""
    words = [int(master_seed) & 0xFFFFFFFF, (int(master_seed) >> 32) & 0xFFFFFFFF]
    for lab in labels:
        words.append(zlib.crc32(str(lab).encode()))
    return np.random.default_rng(np.random.SeedSequence(words))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from an existing stream."""
    return int(rng.integers(0, 2**63 - 1))
