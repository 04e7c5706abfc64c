"""Bracketed constituency trees: parsing, rendering and LCA queries.

Trees are immutable.  Nodes live in a flat tuple in preorder, so two trees
with the same shape, labels and tokens compare equal with ``==``.

Token indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import (
    EmptyConstituent,
    IndexOutOfRange,
    TrailingInput,
    TreebankError,
    UnbalancedBrackets,
)

__all__ = [
    "Node",
    "ConstituencyTree",
    "parse_ptb",
    "render_ptb",
    "lca_height",
    "random_tree",
    "iter_tree_lines",
    "escape_token",
    "unescape_token",
]

# (label, children) for internal nodes, plain str for leaves.
Nested = Union[str, tuple]

_ESCAPES = (("(", "-LRB-"), (")", "-RRB-"))


def escape_token(token: str) -> str:
    for raw, esc in _ESCAPES:
        token = token.replace(raw, esc)
    return token


def unescape_token(token: str) -> str:
    for raw, esc in _ESCAPES:
        token = token.replace(esc, raw)
    return token


@dataclass(frozen=True)
class Node:
    label: str
    parent: int | None
    children: tuple[int, ...]
    span: tuple[int, int]  # inclusive token interval

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class ConstituencyTree:
    """Ordered rooted tree over a token sequence.

    Leaves carry the surface token as their label.  ``leaves[k]`` is the
    node index of token ``k`` and ``heights[v]`` the height of node ``v``
    (see :func:`lca_height` for the convention).
    """

    nodes: tuple[Node, ...]
    root: int
    tokens: tuple[str, ...]
    leaves: tuple[int, ...] = field(init=False, repr=False, compare=False)
    heights: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        leaves = [v for v, node in enumerate(self.nodes) if node.is_leaf]
        leaves.sort(key=lambda v: self.nodes[v].span[0])
        object.__setattr__(self, "leaves", tuple(leaves))
        object.__setattr__(self, "heights", _compute_heights(self.nodes, self.root))
        self._validate()

    def _validate(self) -> None:
        nodes = self.nodes
        if not nodes or not self.tokens:
            raise ValueError("a tree needs at least one token")
        roots = [v for v, node in enumerate(nodes) if node.parent is None]
        if roots != [self.root]:
            raise ValueError(f"expected exactly one root at {self.root}, got {roots}")
        if len(self.leaves) != len(self.tokens):
            raise ValueError("leaf count does not match token count")
        for k, v in enumerate(self.leaves):
            if nodes[v].span != (k, k):
                raise ValueError(f"leaf {v} has span {nodes[v].span}, expected {(k, k)}")
            if nodes[v].label != self.tokens[k]:
                raise ValueError(f"leaf {v} label differs from token {k}")
        for v, node in enumerate(nodes):
            for c in node.children:
                if nodes[c].parent != v:
                    raise ValueError(f"node {c} does not point back to parent {v}")
            if node.children:
                spans = [nodes[c].span for c in node.children]
                if spans[0][0] != node.span[0] or spans[-1][1] != node.span[1]:
                    raise ValueError(f"span of node {v} is not the union of its children")
                for (_, end), (start, _) in zip(spans, spans[1:]):
                    if start != end + 1:
                        raise ValueError(f"children of node {v} are not contiguous")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def root_label(self) -> str:
        return self.nodes[self.root].label

    @classmethod
    def from_nested(cls, nested: Nested) -> "ConstituencyTree":
        """Build a tree from ``(label, [children...])`` tuples and str leaves."""
        if isinstance(nested, str):
            raise ValueError("the root must be a (label, children) pair")
        nodes: list[list] = []  # [label, parent, children, start, end]
        tokens: list[str] = []
        # Iterative preorder so deep unary chains do not hit the recursion limit.
        stack: list[tuple[Nested, int | None]] = [(nested, None)]
        while stack:
            item, parent = stack.pop()
            v = len(nodes)
            if parent is not None:
                nodes[parent][2].append(v)
            if isinstance(item, str):
                nodes.append([item, parent, [], len(tokens), len(tokens)])
                tokens.append(item)
                continue
            label, children = item
            if not children:
                raise ValueError(f"constituent {label!r} has no children")
            nodes.append([label, parent, [], len(tokens), -1])
            for child in reversed(children):
                stack.append((child, v))
        for v in range(len(nodes) - 1, -1, -1):
            rec = nodes[v]
            if rec[2]:
                rec[3] = nodes[rec[2][0]][3]
                rec[4] = nodes[rec[2][-1]][4]
        return cls(
            nodes=tuple(Node(lab, par, tuple(ch), (s, e)) for lab, par, ch, s, e in nodes),
            root=0,
            tokens=tuple(tokens),
        )

    def to_nested(self) -> Nested:
        def walk(v: int) -> Nested:
            node = self.nodes[v]
            if node.is_leaf:
                return node.label
            return (node.label, [walk(c) for c in node.children])

        return walk(self.root)


def _compute_heights(nodes: Sequence[Node], root: int) -> tuple[int, ...]:
    heights = [0] * len(nodes)
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(nodes[v].children)
    for v in reversed(order):
        children = nodes[v].children
        if len(children) == 1:
            heights[v] = heights[children[0]]
        elif children:
            heights[v] = 1 + max(heights[c] for c in children)
    return tuple(heights)


# -- parsing -----------------------------------------------------------------


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    """Yield (token, char offset) pairs: '(', ')' or an atom."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch, i
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], i
            i = j


def parse_ptb(text: str, collapse_preterminals: bool = True) -> ConstituencyTree:
    """Parse one bracketed S-expression into a :class:`ConstituencyTree`.

    With ``collapse_preterminals`` (the default) every non-root node of the
    form ``(TAG token)`` becomes the leaf ``token``, so ``(NP (PRP I))``
    yields an ``NP`` node over the leaf ``I``.  Rendered trees are already
    collapsed; re-read them with ``collapse_preterminals=False`` to get the
    exact same structure back.

    Raises :class:`UnbalancedBrackets`, :class:`EmptyConstituent` or
    :class:`TrailingInput`, each carrying the UTF-8 byte offset.
    """

    def byte_offset(char_offset: int) -> int:
        return len(text[:char_offset].encode("utf-8"))

    # frame: [label or None, children, char offset of '(', children read as bare atoms]
    stack: list[list] = []
    result = None
    for tok, pos in _tokenize(text):
        if result is not None:
            if tok == ")":
                raise UnbalancedBrackets("unmatched ')'", byte_offset(pos))
            raise TrailingInput(f"unexpected {tok!r} after complete tree", byte_offset(pos))
        if tok == "(":
            if stack and stack[-1][0] is None:
                stack[-1][0] = ""  # "( (S ...))" style unlabeled wrapper
            stack.append([None, [], pos, 0])
        elif tok == ")":
            if not stack:
                raise UnbalancedBrackets("unmatched ')'", byte_offset(pos))
            label, children, start, atoms = stack.pop()
            if not children:
                raise EmptyConstituent(
                    f"constituent {label or ''!r} has no children", byte_offset(start)
                )
            node = (label, children)
            if stack:
                if collapse_preterminals and len(children) == 1 and atoms == 1:
                    node = children[0]
                stack[-1][1].append(node)
            else:
                result = node
        else:
            if not stack:
                raise TreebankError(f"expected '(' but found {tok!r}", byte_offset(pos))
            frame = stack[-1]
            if frame[0] is None:
                frame[0] = tok
            else:
                frame[1].append(unescape_token(tok))
                frame[3] += 1
    if stack:
        raise UnbalancedBrackets("unclosed '('", byte_offset(stack[-1][2]))
    if result is None:
        raise EmptyConstituent("no tree found", byte_offset(len(text)))
    return ConstituencyTree.from_nested(result)


def render_ptb(tree: ConstituencyTree) -> str:
    """Canonical single-space bracketed form; leaves are bare tokens."""
    parts: list[str] = []
    # (node, closing) work items
    stack: list[tuple[int, bool]] = [(tree.root, False)]
    while stack:
        v, closing = stack.pop()
        if closing:
            parts.append(")")
            continue
        node = tree.nodes[v]
        if parts and parts[-1] != "(":
            parts.append(" ")
        if node.is_leaf:
            parts.append(escape_token(node.label))
            continue
        parts.append("(")
        parts.append(node.label)
        stack.append((v, True))
        for c in reversed(node.children):
            stack.append((c, False))
    return "".join(parts)


def iter_tree_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    """Yield ``(line_number, text)`` for tree lines, skipping blanks and comments."""
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield number, stripped


# -- queries -----------------------------------------------------------------


def lca_height(tree: ConstituencyTree, i: int, j: int) -> int:
    """Height of the lowest common ancestor of tokens ``i`` and ``j``.

    Leaves have height 0 and a branching node is one above its tallest
    child.  Unary nodes take their only child's height: a unary chain does
    not merge anything, and counting it would break rank agreement with the
    distance vectors for trees that contain such chains.
    """
    n = len(tree.tokens)
    for k in (i, j):
        if not 0 <= k < n:
            raise IndexOutOfRange(f"token index {k} outside [0, {n})")
    lo, hi = min(i, j), max(i, j)
    v = tree.leaves[lo]
    while tree.nodes[v].span[1] < hi:
        v = tree.nodes[v].parent
    return tree.heights[v]


_LABELS = ("S", "NP", "VP", "PP", "SBAR", "ADJP", "ADVP", "X")
_WORDS = ("the", "river", "swim", "across", "I", ".", ",", "(", ")", "café", "a-b", "x@y")


def random_tree(leaf_count: int, seed: int) -> ConstituencyTree:
    """Deterministic random tree over ``leaf_count`` tokens.

    Mixes binary, n-ary and flat constituents with unary chains, both over
    leaves and over phrases.
    """
    if leaf_count < 1:
        raise ValueError("leaf_count must be at least 1")
    rng = np.random.default_rng(seed)

    def label() -> str:
        return _LABELS[rng.integers(len(_LABELS))]

    def wrap_unary(node: Nested, p: float) -> Nested:
        while rng.random() < p:
            node = (label(), [node])
        return node

    def build(lo: int, hi: int) -> Nested:
        size = hi - lo
        if size == 1:
            return wrap_unary(_WORDS[rng.integers(len(_WORDS))], 0.25)
        if rng.random() < 0.15:
            cuts = list(range(lo + 1, hi))
        else:
            arity = int(rng.integers(2, min(size, 4) + 1))
            cuts = sorted(int(c) for c in rng.choice(np.arange(lo + 1, hi), arity - 1, replace=False))
        bounds = [lo, *cuts, hi]
        children = [build(a, b) for a, b in zip(bounds, bounds[1:])]
        return wrap_unary((label(), children), 0.15)

    root = build(0, leaf_count)
    if isinstance(root, str):
        root = (label(), [root])
    return ConstituencyTree.from_nested(root)
