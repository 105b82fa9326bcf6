"""Dynamic weighted sampling over node fitnesses.

A binary-indexed (Fenwick) cumulative tree: point update and proportional
sampling both cost O(log n).  An alias table would be O(1) per sample but
cannot absorb the per-step fitness change of the sampled node.
"""

from __future__ import annotations

import numpy as np


class FenwickSampler:
    """Fenwick tree over float64 weights with prefix-descent sampling."""

    def __init__(self, capacity: int):
        size = 1
        while size < capacity:
            size *= 2
        self.size = size
        self.tree = np.zeros(size + 1, dtype=np.float64)

    def add(self, i: int, delta: float) -> None:
        i += 1
        tree = self.tree
        while i <= self.size:
            tree[i] += delta
            i += i & (-i)

    def prefix_sum(self, i: int) -> float:
        """Sum of weights at indices 0..i-1."""
        total = 0.0
        tree = self.tree
        while i > 0:
            total += tree[i]
            i -= i & (-i)
        return float(total)

    def tree_total(self) -> float:
        return self.prefix_sum(self.size)

    def find(self, x: float) -> int:
        """Smallest index whose cumulative weight exceeds ``x``."""
        idx = 0
        bit = self.size
        tree = self.tree
        while bit:
            nxt = idx + bit
            if nxt <= self.size and tree[nxt] <= x:
                x -= tree[nxt]
                idx = nxt
            bit >>= 1
        return idx

    def rebuild(self, values: np.ndarray) -> None:
        """O(n) reconstruction from leaf values; kills accumulated drift."""
        tree = self.tree
        tree[:] = 0.0
        n = len(values)
        tree[1:n + 1] = values
        # level-by-level: entries with low bit 2**l feed their parent at i + 2**l
        stride = 1
        while stride < self.size:
            idx = np.arange(stride, self.size + 1 - stride, 2 * stride)
            tree[idx + stride] += tree[idx]
            stride *= 2

    def grown(self, capacity: int, values: np.ndarray) -> "FenwickSampler":
        out = FenwickSampler(capacity)
        out.rebuild(values)
        return out
