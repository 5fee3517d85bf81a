"""Binary indexed tree over nonnegative weights with append and prefix search."""

from __future__ import annotations

import math


class Fenwick:
    """Prefix sums over a growable array of nonnegative weights.

    ``find(target)`` returns the element whose cumulative interval contains
    ``target`` together with the offset of ``target`` inside that element.
    Zero-weight elements are never returned.
    """

    __slots__ = ("_tree", "_values", "_n", "_cap", "_top")

    def __init__(self, values=(), capacity: int = 16):
        self._values = [float(v) for v in values]
        self._n = len(self._values)
        self._cap = max(capacity, self._n, 1)
        self._rebuild()

    def _rebuild(self) -> None:
        cap = self._cap
        tree = [0.0] * (cap + 1)
        tree[1:self._n + 1] = self._values
        for i in range(1, cap + 1):
            j = i + (i & -i)
            if j <= cap:
                tree[j] += tree[i]
        self._tree = tree
        self._top = 1 << (cap.bit_length() - 1)

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i: int) -> float:
        return self._values[i]

    @property
    def values(self) -> list[float]:
        return self._values

    def append(self, value: float) -> int:
        if self._n == self._cap:
            self._values.append(float(value))
            self._n += 1
            self._cap *= 2
            self._rebuild()
            return self._n - 1
        self._values.append(0.0)
        self._n += 1
        self.add(self._n - 1, float(value))
        return self._n - 1

    def add(self, i: int, delta: float) -> None:
        self._values[i] += delta
        tree = self._tree
        cap = self._cap
        j = i + 1
        while j <= cap:
            tree[j] += delta
            j += j & -j

    def set(self, i: int, value: float) -> None:
        self.add(i, value - self._values[i])
        self._values[i] = float(value)

    def prefix(self, i: int) -> float:
        """Sum of the first ``i`` weights."""
        tree = self._tree
        s = 0.0
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def total(self) -> float:
        return self.prefix(self._n)

    def find(self, target: float) -> tuple[int, float]:
        """Index i with prefix(i) <= target < prefix(i+1), and target - prefix(i).

        Returns index ``len(self)`` when rounding pushes ``target`` past the end.
        """
        tree = self._tree
        cap = self._cap
        pos = 0
        step = self._top
        rem = target
        while step:
            nxt = pos + step
            if nxt <= cap and tree[nxt] <= rem:
                pos = nxt
                rem -= tree[nxt]
            step >>= 1
        if pos >= self._n:
            return self._n, rem
        return pos, rem

    def max_drift(self) -> float:
        """Largest absolute gap between internal nodes and a fresh rebuild."""
        fresh = Fenwick(self._values, self._cap)
        return max((abs(a - b) for a, b in zip(self._tree, fresh._tree)), default=0.0)

    def exact_total(self) -> float:
        return math.fsum(self._values)
