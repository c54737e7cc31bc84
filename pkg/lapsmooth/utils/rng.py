"""
Keyed random streams.

Every random draw in lapsmooth comes from a generator keyed by
(seed, purpose, *indices), so replicates run in any order or on any number
of threads see exactly the same numbers.
"""

import zlib
from typing import Union

import numpy as np

_PURPOSE_CACHE: dict = {}


def purpose_code(purpose: str) -> int:
    """Stable 32-bit code for a purpose label."""
    code = _PURPOSE_CACHE.get(purpose)
    if code is None:
        code = zlib.crc32(purpose.encode("utf-8"))
        _PURPOSE_CACHE[purpose] = code
    return code


def keyed_rng(seed: int, purpose: str, *indices: Union[int, np.integer]) -> np.random.Generator:
    """
    Generator for one (seed, purpose, indices) key.

    Args:
        seed: Master seed (unsigned 64-bit)
        purpose: Stream label such as "design", "noise" or "permutation"
        *indices: Replicate coordinates, e.g. (n, rep)

    Returns:
        An independent numpy Generator
    """
    if int(seed) < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    key = [int(seed), purpose_code(purpose)] + [int(i) for i in indices]
    return np.random.default_rng(np.random.SeedSequence(key))
