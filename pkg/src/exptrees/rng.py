"""Deterministic seeding and replica stream splitting.

Replica ``i`` of a run with master seed ``s`` draws from a Philox
counter-based generator keyed by ``hash64(s, i)``.  Philox streams with
distinct keys are independent by construction, so replicas may run in any
order (or in parallel) without changing results.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def hash64(*parts: int) -> int:
    """Mix integers into a single 64-bit key (splitmix64 chain)."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = _splitmix64((h ^ (int(p) & _MASK)) & _MASK)
    return h


def replica_generator(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for replica ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(key=hash64(seed, index)))


def spawn_generators(seed: int, count: int) -> list[np.random.Generator]:
    return [replica_generator(seed, i) for i in range(count)]
