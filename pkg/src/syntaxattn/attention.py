"""Masked softmax and a syntax-guided Transformer encoder layer in numpy.

Everything runs in float64.  The encoder layer is post-norm with no
dropout; the first ``grammar_heads`` heads see the syntax mask and the rest
attend globally.  :func:`encoder_backward` is hand-written reverse mode and
:func:`gradient_check` compares it against central finite differences.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distance import DistanceVector
from .errors import DimensionMismatch, ZeroMaskRow
from .localrange import LocalRangeMask, induce_from_distances
from .softmask import DEFAULT_TAU, SoftMask, build_soft_mask

__all__ = [
    "AttentionConfig",
    "AttentionLayer",
    "ForwardCache",
    "PRESETS",
    "masked_softmax",
    "masked_softmax_backward",
    "syntax_attention",
    "encoder_forward",
    "encoder_forward_cache",
    "encoder_backward",
    "gradient_check",
    "layer_mask",
    "stack_configs",
    "checksum",
]

PARAM_NAMES = (
    "w_q", "w_k", "w_v", "w_o",
    "w_1", "b_1", "w_2", "b_2",
    "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias",
)


@dataclass(frozen=True)
class AttentionConfig:
    d_model: int
    num_heads: int
    grammar_heads: int = 0
    use_soft_mask: bool = False
    tau: float = DEFAULT_TAU
    d_ff: int | None = None
    activation: str = "relu"
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.d_model <= 0 or self.num_heads <= 0:
            raise ValueError("d_model and num_heads must be positive")
        if self.d_model % self.num_heads:
            raise ValueError(f"d_model={self.d_model} not divisible by {self.num_heads} heads")
        if not 0 <= self.grammar_heads <= self.num_heads:
            raise ValueError(f"grammar_heads must lie in [0, {self.num_heads}]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.num_heads

    @property
    def ff_dim(self) -> int:
        return self.d_ff if self.d_ff is not None else 4 * self.d_model


# Settings from the machine-translation experiments: only encoder layer 0 is
# syntax-guided, with these head counts.
PRESETS = {
    "iwslt14-de2en": dict(d_model=512, num_heads=4, grammar_heads=4, d_ff=1024),
    "iwslt14-en2de": dict(d_model=512, num_heads=4, grammar_heads=3, d_ff=1024),
    "nc11-de2en": dict(d_model=512, num_heads=4, grammar_heads=4, d_ff=1024),
    "nc11-en2de": dict(d_model=512, num_heads=4, grammar_heads=3, d_ff=1024),
    "aspec-ch2ja": dict(d_model=512, num_heads=4, grammar_heads=2, d_ff=2048),
    "wmt14-en2de": dict(d_model=512, num_heads=8, grammar_heads=2, d_ff=1024),
}


def stack_configs(
    num_layers: int, base: AttentionConfig, grammar_layers: Sequence[int] = (0,)
) -> list[AttentionConfig]:
    """Per-layer configs for an encoder stack; layers outside ``grammar_layers`` get no grammar heads."""
    chosen = set(grammar_layers)
    if any(not 0 <= k < num_layers for k in chosen):
        raise ValueError(f"grammar_layers {sorted(chosen)} outside [0, {num_layers})")
    return [
        base if k in chosen else dataclasses.replace(base, grammar_heads=0)
        for k in range(num_layers)
    ]


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0).astype(z.dtype)


_GELU_C = np.sqrt(2.0 / np.pi)


def _gelu(z):
    return 0.5 * z * (1.0 + np.tanh(_GELU_C * (z + 0.044715 * z**3)))


def _gelu_grad(z):
    u = _GELU_C * (z + 0.044715 * z**3)
    t = np.tanh(u)
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t**2) * _GELU_C * (1.0 + 3 * 0.044715 * z**2)


_ACTIVATIONS = {"relu": (_relu, _relu_grad), "gelu": (_gelu, _gelu_grad)}


@dataclass(frozen=True, eq=False)
class AttentionLayer:
    """Weights of one encoder layer.  Projections act as ``x @ w``."""

    config: AttentionConfig
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    w_1: np.ndarray
    b_1: np.ndarray
    w_2: np.ndarray
    b_2: np.ndarray
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray

    def __post_init__(self):
        d, f = self.config.d_model, self.config.ff_dim
        expected = {
            "w_q": (d, d), "w_k": (d, d), "w_v": (d, d), "w_o": (d, d),
            "w_1": (d, f), "b_1": (f,), "w_2": (f, d), "b_2": (d,),
            "ln1_gain": (d,), "ln1_bias": (d,), "ln2_gain": (d,), "ln2_bias": (d,),
        }
        for name, shape in expected.items():
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != shape:
                raise DimensionMismatch(f"{name} has shape {value.shape}, expected {shape}")
            object.__setattr__(self, name, value)

    @classmethod
    def random(cls, config: AttentionConfig, seed: int) -> "AttentionLayer":
        rng = np.random.default_rng(seed)
        d, f = config.d_model, config.ff_dim

        def dense(fan_in, fan_out):
            return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))

        return cls(
            config=config,
            w_q=dense(d, d), w_k=dense(d, d), w_v=dense(d, d), w_o=dense(d, d),
            w_1=dense(d, f), b_1=rng.normal(0.0, 0.1, f),
            w_2=dense(f, d), b_2=rng.normal(0.0, 0.1, d),
            ln1_gain=1.0 + rng.normal(0.0, 0.1, d), ln1_bias=rng.normal(0.0, 0.1, d),
            ln2_gain=1.0 + rng.normal(0.0, 0.1, d), ln2_bias=rng.normal(0.0, 0.1, d),
        )

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes) -> "AttentionLayer":
        return dataclasses.replace(self, **changes)


def _as_mask_array(mask, n: int) -> np.ndarray:
    if mask is None:
        return np.ones((n, n))
    if isinstance(mask, LocalRangeMask):
        arr = mask.as_float()
    elif isinstance(mask, SoftMask):
        arr = mask.weights
    else:
        arr = np.asarray(mask, dtype=np.float64)
    if arr.shape != (n, n):
        raise DimensionMismatch(f"mask has shape {arr.shape}, sequence length is {n}")
    return arr


def layer_mask(d: DistanceVector | Sequence[float], config: AttentionConfig) -> np.ndarray:
    """The mask a layer's grammar heads should use for distances ``d``."""
    if config.use_soft_mask:
        return build_soft_mask(d, config.tau).weights
    return induce_from_distances(d).as_float()


def masked_softmax(M, X) -> np.ndarray:
    """Row-wise ``m * exp(x) / sum(m * exp(x))``.

    The row max is taken over supported entries (``m > 0``) only, so
    masked-out logits can never overflow the result; their outputs are
    exactly zero.  Works on any leading batch dimensions.
    """
    M = np.asarray(M, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if M.shape != X.shape:
        raise DimensionMismatch(f"mask shape {M.shape} != logits shape {X.shape}")
    support = M > 0
    if not support.any(axis=-1).all():
        raise ZeroMaskRow("every row of the mask needs at least one positive entry")
    row_max = np.max(np.where(support, X, -np.inf), axis=-1, keepdims=True)
    e = np.where(support, M * np.exp(np.where(support, X - row_max, 0.0)), 0.0)
    return e / np.sum(e, axis=-1, keepdims=True)


def masked_softmax_backward(P: np.ndarray, dP: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the logits given the forward output ``P``.

    The mask only reweights ``exp(x)``, so this is the plain softmax
    Jacobian; unsupported entries have ``P = 0`` and get zero gradient.
    """
    return P * (dP - np.sum(dP * P, axis=-1, keepdims=True))


def syntax_attention(Q, K, V, G) -> np.ndarray:
    """Single-head ``masked_softmax(G, Q K^T / sqrt(d_k)) V``."""
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    if Q.shape != K.shape or Q.shape[0] != V.shape[0]:
        raise DimensionMismatch(f"incompatible shapes Q{Q.shape} K{K.shape} V{V.shape}")
    G = _as_mask_array(G, Q.shape[0])
    P = masked_softmax(G, Q @ K.T / np.sqrt(Q.shape[1]))
    return P @ V


def _layer_norm(r, gain, bias, eps):
    mu = r.mean(axis=-1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(r.var(axis=-1, keepdims=True) + eps)
    xhat = (r - mu) * inv_sigma
    return gain * xhat + bias, xhat, inv_sigma


def _layer_norm_backward(dy, xhat, inv_sigma, gain):
    dxhat = dy * gain
    dr = inv_sigma * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dr, np.sum(dy * xhat, axis=0), np.sum(dy, axis=0)


@dataclass
class ForwardCache:
    x: np.ndarray
    masks: list[np.ndarray]
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    attn: np.ndarray  # (heads, n, n) attention probabilities
    context: np.ndarray
    xhat1: np.ndarray
    inv_sigma1: np.ndarray
    y1: np.ndarray
    pre_act: np.ndarray
    hidden: np.ndarray
    xhat2: np.ndarray
    inv_sigma2: np.ndarray
    output: np.ndarray = field(repr=False)


def encoder_forward_cache(layer: AttentionLayer, x, mask=None) -> ForwardCache:
    cfg = layer.config
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cfg.d_model:
        raise DimensionMismatch(f"input shape {x.shape}, expected (n, {cfg.d_model})")
    n = x.shape[0]
    grammar_mask = _as_mask_array(mask, n) if cfg.grammar_heads else None
    ones = np.ones((n, n))
    dk = cfg.head_dim
    scale = np.sqrt(dk)

    q, k, v = x @ layer.w_q, x @ layer.w_k, x @ layer.w_v
    masks, probs, contexts = [], [], []
    for h in range(cfg.num_heads):
        cols = slice(h * dk, (h + 1) * dk)
        m = grammar_mask if h < cfg.grammar_heads else ones
        p = masked_softmax(m, q[:, cols] @ k[:, cols].T / scale)
        masks.append(m)
        probs.append(p)
        contexts.append(p @ v[:, cols])
    context = np.concatenate(contexts, axis=1)
    y1, xhat1, inv_sigma1 = _layer_norm(
        x + context @ layer.w_o, layer.ln1_gain, layer.ln1_bias, cfg.ln_eps
    )
    act, _ = _ACTIVATIONS[cfg.activation]
    pre_act = y1 @ layer.w_1 + layer.b_1
    hidden = act(pre_act)
    ffn = hidden @ layer.w_2 + layer.b_2
    out, xhat2, inv_sigma2 = _layer_norm(y1 + ffn, layer.ln2_gain, layer.ln2_bias, cfg.ln_eps)
    return ForwardCache(
        x=x, masks=masks, q=q, k=k, v=v, attn=np.stack(probs), context=context,
        xhat1=xhat1, inv_sigma1=inv_sigma1, y1=y1, pre_act=pre_act, hidden=hidden,
        xhat2=xhat2, inv_sigma2=inv_sigma2, output=out,
    )


def encoder_forward(layer: AttentionLayer, x, mask=None) -> np.ndarray:
    """Run one encoder layer on an ``(n, d_model)`` input.

    ``mask`` (hard, soft or a plain array) is applied to the grammar heads
    only and may be ``None`` when the layer has none.
    """
    return encoder_forward_cache(layer, x, mask).output


def encoder_backward(layer: AttentionLayer, x, mask, upstream) -> dict[str, np.ndarray]:
    """Gradients of ``sum(encoder_forward(...) * upstream)``.

    Returns one array per parameter name plus ``"input"``.  The mask is a
    constant.
    """
    cfg = layer.config
    c = encoder_forward_cache(layer, x, mask)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != c.output.shape:
        raise DimensionMismatch(f"upstream shape {upstream.shape} != output {c.output.shape}")
    grads: dict[str, np.ndarray] = {}

    dr2, grads["ln2_gain"], grads["ln2_bias"] = _layer_norm_backward(
        upstream, c.xhat2, c.inv_sigma2, layer.ln2_gain
    )
    grads["w_2"] = c.hidden.T @ dr2
    grads["b_2"] = dr2.sum(axis=0)
    _, act_grad = _ACTIVATIONS[cfg.activation]
    dpre = (dr2 @ layer.w_2.T) * act_grad(c.pre_act)
    grads["w_1"] = c.y1.T @ dpre
    grads["b_1"] = dpre.sum(axis=0)
    dy1 = dr2 + dpre @ layer.w_1.T

    dr1, grads["ln1_gain"], grads["ln1_bias"] = _layer_norm_backward(
        dy1, c.xhat1, c.inv_sigma1, layer.ln1_gain
    )
    grads["w_o"] = c.context.T @ dr1
    dcontext = dr1 @ layer.w_o.T

    dk = cfg.head_dim
    scale = np.sqrt(dk)
    dq, dkey, dv = np.zeros_like(c.q), np.zeros_like(c.k), np.zeros_like(c.v)
    for h in range(cfg.num_heads):
        cols = slice(h * dk, (h + 1) * dk)
        p = c.attn[h]
        dctx = dcontext[:, cols]
        dv[:, cols] = p.T @ dctx
        dlogits = masked_softmax_backward(p, dctx @ c.v[:, cols].T) / scale
        dq[:, cols] = dlogits @ c.k[:, cols]
        dkey[:, cols] = dlogits.T @ c.q[:, cols]
    grads["w_q"] = c.x.T @ dq
    grads["w_k"] = c.x.T @ dkey
    grads["w_v"] = c.x.T @ dv
    grads["input"] = dr1 + dq @ layer.w_q.T + dkey @ layer.w_k.T + dv @ layer.w_v.T
    return {name: grads[name] for name in (*PARAM_NAMES, "input")}


def gradient_check(
    layer: AttentionLayer, x, mask, upstream, step: float = 1e-5
) -> dict[str, float]:
    """Relative error between analytic and central-difference gradients.

    For each parameter (and the input) returns
    ``||analytic - numeric|| / max(||analytic||, ||numeric||)``.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    analytic = encoder_backward(layer, x, mask, upstream)

    def loss(lyr, inp):
        return float(np.sum(encoder_forward(lyr, inp, mask) * upstream))

    errors = {}
    for name, grad in analytic.items():
        base = x if name == "input" else getattr(layer, name)
        numeric = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            values = []
            for sign in (1.0, -1.0):
                shifted = base.copy()
                shifted[idx] += sign * step
                if name == "input":
                    values.append(loss(layer, shifted))
                else:
                    values.append(loss(layer.replace(**{name: shifted}), x))
            numeric[idx] = (values[0] - values[1]) / (2 * step)
        denom = max(np.linalg.norm(grad), np.linalg.norm(numeric))
        errors[name] = 0.0 if denom == 0 else float(np.linalg.norm(grad - numeric) / denom)
    return errors


def checksum(array: np.ndarray) -> str:
    """SHA-256 of the little-endian float64 bytes."""
    return hashlib.sha256(np.ascontiguousarray(array, dtype="<f8").tobytes()).hexdigest()
