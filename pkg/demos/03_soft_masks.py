"""
Soft masks
==========

Instead of cutting attention at the range boundary, weights decay by a
tanh soft comparison for every gap crossed.  Small temperatures approach
the hard mask, larger ones let more attention leak outside the range.
"""

import numpy as np

from syntaxattn import build_soft_mask, induce_from_distances

d = [4, 3, 2, 1, 4]
np.set_printoptions(precision=3, suppress=True)

print("hard mask")
print(induce_from_distances(d).as_float())

for tau in (1e-6, 1.0, 10.0):
    print(f"\ntau = {tau:g}")
    print(build_soft_mask(d, tau).weights)

# Ties between the anchor distance and a crossed gap contribute exactly
# one half, even in the hard limit: tokens 0 and 5 both sit next to a gap
# of 4.
print("\ntie entry at tau=1e-6:", build_soft_mask(d, 1e-6).weights[0, 5])
