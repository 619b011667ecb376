"""Deterministic random streams.

All randomness in the package flows through Philox-4x64-10, a
counter-based 64-bit generator with a published specification, so any
(seed, stream) pair reproduces the same values on every platform and
under any degree of parallelism.
"""
from __future__ import annotations

import numpy as np


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the given 64-bit seed and stream index."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if not 0 <= int(stream) < 2**64:
        raise ValueError(f"stream must fit in 64 bits, got {stream}")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
