"""Independent reference implementations used as test oracles."""

import numpy as np


def vanilla_reference(layer, x):
    """Plain post-norm encoder layer with ordinary softmax and no mask."""
    cfg = layer.config
    dk = cfg.head_dim
    q, k, v = x @ layer.w_q, x @ layer.w_k, x @ layer.w_v
    heads = []
    for h in range(cfg.num_heads):
        s = slice(h * dk, (h + 1) * dk)
        logits = q[:, s] @ k[:, s].T / np.sqrt(dk)
        e = np.exp(logits - logits.max(axis=-1, keepdims=True))
        heads.append(e / e.sum(axis=-1, keepdims=True) @ v[:, s])
    r = x + np.concatenate(heads, axis=1) @ layer.w_o

    def norm(r, gain, bias):
        mu = r.mean(axis=-1, keepdims=True)
        return gain * ((r - mu) * (1.0 / np.sqrt(r.var(axis=-1, keepdims=True) + cfg.ln_eps))) + bias

    y = norm(r, layer.ln1_gain, layer.ln1_bias)
    f = np.maximum(y @ layer.w_1 + layer.b_1, 0.0) @ layer.w_2 + layer.b_2
    return norm(y + f, layer.ln2_gain, layer.ln2_bias)
