"""Syntactic distance vectors: generation, rank check, subword expansion.

A distance vector for ``n`` tokens has ``n - 1`` entries, one per gap
between consecutive tokens.  Values are ranks and stay integers until the
soft-mask stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentMismatch, LengthMismatch, SentinelOverflow
from .treebank import ConstituencyTree, lca_height

__all__ = [
    "DistanceVector",
    "BpeAlignment",
    "generate_distances",
    "verify_sign_property",
    "expand_bpe",
    "finalize",
    "concat_sentences",
    "DEFAULT_SENTINEL",
    "CONTINUATION_MARKER",
]

DEFAULT_SENTINEL = 999
CONTINUATION_MARKER = "@@"


@dataclass(frozen=True)
class DistanceVector:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @property
    def token_count(self) -> int:
        return len(self.values) + 1

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def as_array(self, dtype=np.int64) -> np.ndarray:
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class BpeAlignment:
    """Maps each word to the half-open run ``(start, stop)`` of its subwords."""

    word_to_subwords: tuple[tuple[int, int], ...]
    subword_tokens: tuple[str, ...]

    def __post_init__(self):
        pos = 0
        for start, stop in self.word_to_subwords:
            if start != pos or stop <= start:
                raise ValueError("subword runs must be contiguous, ordered and non-empty")
            pos = stop
        if pos != len(self.subword_tokens):
            raise ValueError(
                f"runs cover {pos} subwords but {len(self.subword_tokens)} were given"
            )

    @property
    def word_count(self) -> int:
        return len(self.word_to_subwords)

    @classmethod
    def from_subwords(
        cls, subwords: Sequence[str], marker: str = CONTINUATION_MARKER
    ) -> "BpeAlignment":
        """Group subword-nmt style output: a trailing ``marker`` continues the word."""
        runs = []
        start = 0
        for k, piece in enumerate(subwords):
            if not piece.endswith(marker):
                runs.append((start, k + 1))
                start = k + 1
        if start != len(subwords):
            raise ValueError(f"last subword {subwords[-1]!r} ends with a continuation marker")
        return cls(tuple(runs), tuple(subwords))

    @classmethod
    def identity(cls, tokens: Sequence[str]) -> "BpeAlignment":
        return cls(tuple((k, k + 1) for k in range(len(tokens))), tuple(tokens))


def generate_distances(tree: ConstituencyTree) -> DistanceVector:
    """Serialize a tree into word-level distances by recursive splitting.

    A leaf contributes nothing.  An internal node takes one more than the
    largest value found anywhere in its children's vectors (0 if there is
    none) and places it between every pair of consecutive children.
    """
    nodes = tree.nodes
    order = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(nodes[v].children)

    vectors: dict[int, list[int]] = {}
    peaks: dict[int, int] = {}
    for v in reversed(order):
        children = nodes[v].children
        if not children:
            vectors[v], peaks[v] = [], 0
            continue
        merge = 1 + max(peaks[c] for c in children)
        out = list(vectors.pop(children[0]))
        for c in children[1:]:
            out.append(merge)
            out.extend(vectors.pop(c))
        vectors[v] = out
        peaks[v] = merge if len(children) > 1 else peaks[children[0]]
    return DistanceVector(tuple(vectors[tree.root]))


def verify_sign_property(tree: ConstituencyTree, d: DistanceVector | Sequence[int]) -> bool:
    """True iff ``d`` ranks the gaps exactly like their LCA heights do."""
    values = np.asarray(list(d), dtype=np.float64)
    n = len(tree.tokens)
    if len(values) != n - 1:
        raise LengthMismatch(f"{len(values)} distances for {n} tokens")
    heights = np.array([lca_height(tree, k, k + 1) for k in range(n - 1)], dtype=np.float64)
    return bool(
        np.array_equal(
            np.sign(values[:, None] - values[None, :]),
            np.sign(heights[:, None] - heights[None, :]),
        )
    )


def expand_bpe(d: DistanceVector, align: BpeAlignment) -> DistanceVector:
    """Spread word distances over subwords and shift everything up by one.

    Gaps inside a word get 0, gaps between words keep the word distance,
    then every entry is incremented so the minimum is 1.  The shift is
    applied even when nothing was split.
    """
    if align.word_count != d.token_count:
        raise AlignmentMismatch(
            f"alignment has {align.word_count} words, distances cover {d.token_count}"
        )
    raw: list[int] = []
    for w, (start, stop) in enumerate(align.word_to_subwords):
        raw.extend([0] * (stop - start - 1))
        if w < len(d.values):
            raw.append(d.values[w])
    return DistanceVector(tuple(v + 1 for v in raw))


def finalize(tree: ConstituencyTree, subwords: Sequence[str] | None = None) -> DistanceVector:
    """Tree to final (shifted, optionally subword-level) distances."""
    align = (
        BpeAlignment.identity(tree.tokens)
        if subwords is None
        else BpeAlignment.from_subwords(subwords)
    )
    return expand_bpe(generate_distances(tree), align)


def concat_sentences(
    ds: Iterable[DistanceVector], sentinel: int = DEFAULT_SENTINEL
) -> DistanceVector:
    """Join finalized sentence vectors with ``sentinel`` at each boundary."""
    out: list[int] = []
    for k, d in enumerate(ds):
        if any(v >= sentinel for v in d.values):
            raise SentinelOverflow(
                f"sentence {k} has distance {max(d.values)} >= sentinel {sentinel}"
            )
        if k:
            out.append(sentinel)
        out.extend(d.values)
    return DistanceVector(tuple(out))
