"""Seed derivation shared by every module.

All randomness flows from one root seed. A stream for ``(module, index...)``
is a Philox generator keyed by
``SeedSequence(root, spawn_key=(crc32(module), *index))``; the mapping is
platform independent and does not depend on call order or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np

PRNG_NAME = "Philox4x64-10"


def module_key(module: str) -> int:
    return zlib.crc32(module.encode("utf-8"))


def seed_sequence(root: int, module: str, *index: int) -> np.random.SeedSequence:
    if root < 0:
        raise ValueError("root seed must be non-negative")
    key = (module_key(module),) + tuple(int(i) for i in index)
    return np.random.SeedSequence(int(root), spawn_key=key)


def derive_rng(root: int, module: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(root, module, *index)))


def derive_seed(root: int, module: str, *index: int) -> int:
    """A 63-bit integer seed, for APIs that want a plain int."""
    return int(seed_sequence(root, module, *index).generate_state(1, np.uint64)[0] >> np.uint64(1))


def as_rng(seed: int | np.random.Generator, module: str = "default") -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(int(seed), module)
