"""
Local attention ranges
======================

Each token gets a contiguous range of grammatically close neighbours.  The
range can be read off the distance vector or found by walking the tree;
both give the same mask.
"""

import numpy as np

from syntaxattn import (
    generate_distances,
    induce_from_distances,
    masks_equal,
    parse_ptb,
    random_tree,
    range_from_tree,
)

tree = parse_ptb("(S (NP (PRP I)) (VP (VBP swim) (PP (IN across) (NP (DT the) (NN river)))) (. .))")
mask = induce_from_distances(generate_distances(tree))

width = max(map(len, tree.tokens))
for token, row in zip(tree.tokens, mask.bits):
    print(f"{token:>{width}}  " + " ".join("#" if b else "." for b in row))

# "across" attends to swim, the and river but not to I or the full stop.
print([t for t, b in zip(tree.tokens, mask.bits[2]) if b])

# The two constructions agree on arbitrary trees, including flat
# constituents and unary chains.
trees = [random_tree(1 + seed % 30, seed) for seed in range(500)]
agree = all(
    masks_equal(induce_from_distances(generate_distances(t)), range_from_tree(t)) for t in trees
)
print("distance and tree ranges agree on 500 random trees:", agree)

# Only the ranking of the distances matters.
d = np.array(generate_distances(tree).values)
print("invariant under exp relabel:", masks_equal(mask, induce_from_distances(np.exp(d))))
