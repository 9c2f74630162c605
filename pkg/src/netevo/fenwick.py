"""Growable Fenwick (binary indexed) tree over non-negative float weights.

Supports point updates, appends and drawing an index with probability
proportional to its weight, all in O(log n).
"""

from __future__ import annotations

import math
from typing import Iterable


class FenwickTree:
    def __init__(self, weights: Iterable[float] = ()):
        self.weights: list[float] = [float(w) for w in weights]
        self._build(max(16, 1 << max(0, len(self.weights) - 1).bit_length()))

    def _build(self, capacity: int) -> None:
        self._cap = capacity
        tree = [0.0] * (capacity + 1)
        tree[1 : len(self.weights) + 1] = self.weights
        for i in range(1, capacity + 1):
            j = i + (i & -i)
            if j <= capacity:
                tree[j] += tree[i]
        self._tree = tree
        self.total = math.fsum(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def append(self, w: float = 0.0) -> None:
        self.weights.append(0.0)
        if len(self.weights) > self._cap:
            self._build(self._cap * 2)
        if w:
            self.set(len(self.weights) - 1, w)

    def set(self, index: int, w: float) -> None:
        delta = w - self.weights[index]
        if delta == 0.0:
            return
        self.weights[index] = w
        self.total += delta
        tree, cap = self._tree, self._cap
        j = index + 1
        while j <= cap:
            tree[j] += delta
            j += j & -j

    def prefix(self, index: int) -> float:
        """Sum of weights[0:index]."""
        s = 0.0
        j = index
        tree = self._tree
        while j > 0:
            s += tree[j]
            j -= j & -j
        return s

    def find(self, u: float) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``u``."""
        tree = self._tree
        pos = 0
        step = self._cap
        while step:
            nxt = pos + step
            if nxt <= self._cap and tree[nxt] <= u:
                pos = nxt
                u -= tree[nxt]
            step >>= 1
        return pos

    def sample(self, rng) -> int:
        """Index drawn with probability weight / total."""
        if self.total <= 0.0:
            raise ValueError("cannot sample with all-zero weights")
        n = len(self.weights)
        while True:
            i = self.find(rng.random() * self.total)
            # float drift can land on a zero-weight slot or past the end
            if i < n and self.weights[i] > 0.0:
                return i

    def rebuild(self) -> None:
        self._build(self._cap)
