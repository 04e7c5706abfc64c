"""
Syntactic distances from a bracketed tree
=========================================

Read a parser-style tree, serialize it into gap distances, check that the
distances rank the gaps like the tree does, and carry them over to subwords
and multi-sentence documents.
"""

from syntaxattn import (
    BpeAlignment,
    concat_sentences,
    expand_bpe,
    finalize,
    generate_distances,
    lca_height,
    parse_ptb,
    render_ptb,
    verify_sign_property,
)

# A tree as a constituency parser would print it.  POS tags over single
# tokens are folded into the leaves when parsing.
tree = parse_ptb("(S (NP (PRP I)) (VP (VBP swim) (PP (IN across) (NP (DT the) (NN river)))) (. .))")
print(render_ptb(tree))
print(tree.tokens)

# One distance per gap between neighbouring tokens.
d = generate_distances(tree)
for k, value in enumerate(d):
    left, right = tree.tokens[k], tree.tokens[k + 1]
    print(f"{left:>7} | {right:<7} distance {value}  lca height {lca_height(tree, k, k + 1)}")

# Any vector with the same ranking is acceptable; a flat one is not.
print("ranks agree:", verify_sign_property(tree, d))
print("flat vector agrees:", verify_sign_property(tree, [1, 1, 1, 1, 1]))

# Subword segmentation: gaps inside a word get the lowest value, then
# everything is shifted up by one.
align = BpeAlignment.from_subwords("I sw@@ im across the river .".split())
print("subword distances:", expand_bpe(d, align).values)

# Documents: sentences are joined with a sentinel larger than any distance.
second = parse_ptb("(S (NP (PRP It)) (VP (VBD flowed)))")
print("document:", concat_sentences([finalize(tree), finalize(second)]).values)
