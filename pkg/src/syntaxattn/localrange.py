"""Hard syntactic local-range masks.

Two independent constructions are provided.  :func:`induce_from_distances`
works from a distance vector alone; :func:`range_from_tree` walks the tree
looking for the nearest constituent boundary on each side.  They agree on
every tree, which the test suite checks exhaustively on random trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distance import DistanceVector
from .errors import DimensionMismatch
from .treebank import ConstituencyTree

__all__ = [
    "LocalRangeMask",
    "induce_from_distances",
    "range_from_tree",
    "masks_equal",
]


@dataclass(frozen=True, eq=False)
class LocalRangeMask:
    """Boolean ``n x n`` matrix; row ``i`` is the range token ``i`` attends to."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
            raise DimensionMismatch(f"mask must be square, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def from_intervals(cls, intervals: Sequence[tuple[int, int]]) -> "LocalRangeMask":
        n = len(intervals)
        bits = np.zeros((n, n), dtype=bool)
        for i, (lo, hi) in enumerate(intervals):
            bits[i, lo : hi + 1] = True
        return cls(bits)

    def intervals(self) -> list[tuple[int, int]]:
        """Inclusive ``(first, last)`` column of each row's run of ones."""
        out = []
        for row in self.bits:
            cols = np.flatnonzero(row)
            out.append((int(cols[0]), int(cols[-1])))
        return out

    def is_well_formed(self) -> bool:
        """Every row is one contiguous run of ones covering the diagonal."""
        for i, row in enumerate(self.bits):
            cols = np.flatnonzero(row)
            if cols.size == 0 or not cols[0] <= i <= cols[-1]:
                return False
            if cols[-1] - cols[0] + 1 != cols.size:
                return False
        return True

    def as_float(self) -> np.ndarray:
        return self.bits.astype(np.float64)


def _boundaries(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest strictly greater gap to the left and right of every gap.

    Returns -1 / len(values) where none exists.  Monotonic stack, O(n).
    """
    m = len(values)
    prev_greater = np.full(m, -1, dtype=np.int64)
    next_greater = np.full(m, m, dtype=np.int64)
    stack: list[int] = []
    for g in range(m):
        while stack and values[stack[-1]] <= values[g]:
            stack.pop()
        if stack:
            prev_greater[g] = stack[-1]
        stack.append(g)
    stack.clear()
    for g in range(m - 1, -1, -1):
        while stack and values[stack[-1]] <= values[g]:
            stack.pop()
        if stack:
            next_greater[g] = stack[-1]
        stack.append(g)
    return prev_greater, next_greater


def induce_from_distances(d: DistanceVector | Sequence[float]) -> LocalRangeMask:
    """Local ranges from distances alone.

    Token ``i`` stretches left past every gap no larger than its own left
    gap ``d[i-1]`` and stops right after the first strictly larger one;
    likewise to the right with ``d[i]``.  Ties extend the range.  With no
    stopping gap the range runs to the sequence edge.
    """
    values = np.asarray(list(d), dtype=np.float64)
    n = len(values) + 1
    prev_greater, next_greater = _boundaries(values)
    intervals = []
    for i in range(n):
        # gap g sits between tokens g and g + 1
        lo = 0 if i == 0 else int(prev_greater[i - 1]) + 1
        hi = n - 1 if i == n - 1 else int(next_greater[i])
        intervals.append((lo, min(hi, n - 1)))
    return LocalRangeMask.from_intervals(intervals)


def range_from_tree(tree: ConstituencyTree) -> LocalRangeMask:
    """Local ranges from sibling structure, without computing distances.

    Leftward: if the token has a left sibling, the range starts at its
    parent's first leaf.  Otherwise climb until some ancestor has a left
    sibling and start at the first leaf of that ancestor's parent; if the
    climb reaches the root, start at token 0.  Rightward is the mirror image.
    """
    nodes = tree.nodes
    n = len(tree.tokens)
    intervals = []
    for i in range(n):
        leaf = tree.leaves[i]
        intervals.append((_reach(nodes, leaf, side=0, default=0),
                          _reach(nodes, leaf, side=-1, default=n - 1)))
    return LocalRangeMask.from_intervals(intervals)


def _reach(nodes, v: int, side: int, default: int) -> int:
    """Walk up from ``v`` to the first node that is not its parent's
    ``side``-most child (0: leftmost, -1: rightmost) and return the parent's
    edge token on that side."""
    while nodes[v].parent is not None:
        parent = nodes[nodes[v].parent]
        if parent.children[side] != v:
            return parent.span[0 if side == 0 else 1]
        v = nodes[v].parent
    return default


def masks_equal(a: LocalRangeMask, b: LocalRangeMask) -> bool:
    if a.n != b.n:
        raise DimensionMismatch(f"masks have sizes {a.n} and {b.n}")
    return bool(np.array_equal(a.bits, b.bits))
