"""Counter-based random streams.

Every random draw is addressed by ``(seed, task index, ...)`` so results do
not depend on how work is split across threads.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def task_rng(seed: int, *index: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & MASK64, *[int(i) & MASK64 for i in index]])
    return np.random.Generator(np.random.Philox(key))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)
