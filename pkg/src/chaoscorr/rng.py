"""Deterministic per-task random streams derived from one integer seed."""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode())


def task_rng(seed: int, *keys) -> np.random.Generator:
    """Generator for the task identified by ``keys`` (strings or ints).

    The same ``(seed, keys)`` always yields the same stream, independent of
    execution order or worker count.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.default_rng(ss)
