"""
A syntax-guided encoder layer
=============================

Apply a local-range mask to the first heads of a small encoder layer,
look at where each head puts its attention, and check the hand-written
backward pass against finite differences.
"""

import numpy as np

from syntaxattn import (
    PRESETS,
    AttentionConfig,
    AttentionLayer,
    finalize,
    gradient_check,
    layer_mask,
    parse_ptb,
    stack_configs,
)
from syntaxattn.attention import encoder_forward_cache

tree = parse_ptb("(S (NP (PRP I)) (VP (VBP swim) (PP (IN across) (NP (DT the) (NN river)))) (. .))")
d = finalize(tree)

config = AttentionConfig(d_model=16, num_heads=4, grammar_heads=2)
layer = AttentionLayer.random(config, seed=0)
x = np.random.default_rng(1).normal(size=(len(tree), config.d_model))

cache = encoder_forward_cache(layer, x, layer_mask(d, config))
np.set_printoptions(precision=2, suppress=True)
for h in range(config.num_heads):
    role = "grammar" if h < config.grammar_heads else "vanilla"
    print(f"head {h} ({role}), attention of 'across':", cache.attn[h][2])

# Soft masks keep some weight outside the range.
soft = AttentionConfig(d_model=16, num_heads=4, grammar_heads=2, use_soft_mask=True, tau=10.0)
print("soft grammar head, 'across':", encoder_forward_cache(layer, x, layer_mask(d, soft)).attn[0][2])

upstream = np.random.default_rng(2).normal(size=x.shape)
errors = gradient_check(layer, x, layer_mask(d, config), upstream)
print("largest relative gradient error:", max(errors.values()))

# Translation settings: six encoder layers, grammar heads only in the first.
base = AttentionConfig(**PRESETS["iwslt14-en2de"])
print([c.grammar_heads for c in stack_configs(6, base)])
