"""Syntactic distances and syntax-guided local attention.

Bracketed constituency trees are serialized into syntactic distance
vectors, turned into per-token local attention ranges (hard or tanh-soft),
and applied to a subset of heads in a numpy Transformer encoder layer.
"""

__version__ = "0.1.0"

from .attention import (
    PRESETS,
    AttentionConfig,
    AttentionLayer,
    encoder_backward,
    encoder_forward,
    gradient_check,
    layer_mask,
    masked_softmax,
    stack_configs,
    syntax_attention,
)
from .distance import (
    BpeAlignment,
    DistanceVector,
    concat_sentences,
    expand_bpe,
    finalize,
    generate_distances,
    verify_sign_property,
)
from .localrange import LocalRangeMask, induce_from_distances, masks_equal, range_from_tree
from .maskfile import read_mask, write_mask
from .softmask import SoftMask, SoftMaskConfig, build_soft_mask, soft_compare
from .treebank import ConstituencyTree, lca_height, parse_ptb, random_tree, render_ptb
