"""
Seeded randomness.

All stochastic code takes a numpy Generator. Generators are derived from
integer seeds through SeedSequence so that identical seeds give identical
streams and child streams never overlap.
"""

import hashlib
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """
    Build a PCG64 generator from a seed (or pass a generator through).

    Args:
        seed: Integer seed or existing generator

    Returns:
        numpy Generator
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(base: int, *keys: object) -> int:
    """
    Derive a stable 63-bit seed from a base seed and any labels.

    Used to give every (seed, backbone, method, stage) its own stream that
    does not depend on execution order.
    """
    text = "/".join([str(int(base))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
