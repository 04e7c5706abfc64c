"""Smoothed local-range masks built from tanh soft comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distance import DistanceVector
from .errors import NonPositiveTau

__all__ = ["SoftMaskConfig", "SoftMask", "soft_compare", "build_soft_mask", "DEFAULT_TAU"]

DEFAULT_TAU = 10.0


@dataclass(frozen=True)
class SoftMaskConfig:
    tau: float = DEFAULT_TAU
    hard_limit_epsilon: float = 1e-6

    def __post_init__(self):
        if not self.tau > 0:
            raise NonPositiveTau(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True, eq=False)
class SoftMask:
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def soft_compare(a, b, tau: float):
    """``(tanh((a - b) / tau) + 1) / 2``: near 1 when ``a >> b``, near 0 when ``a << b``.

    Broadcasts over numpy arrays.
    """
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    return (np.tanh((np.asarray(a, dtype=np.float64) - b) / tau) + 1.0) / 2.0


def build_soft_mask(
    d: DistanceVector | Sequence[float], cfg: SoftMaskConfig | float = DEFAULT_TAU
) -> SoftMask:
    """Soft version of :func:`~syntaxattn.localrange.induce_from_distances`.

    Moving outward from token ``i``, each gap crossed multiplies the weight
    by ``soft_compare(anchor, gap)`` where the anchor is ``d[i-1]`` going
    left and ``d[i]`` going right.  The diagonal and both neighbours are
    fixed at 1.  As ``tau -> 0`` this reproduces the hard mask wherever no
    crossed gap ties with the anchor (a tie contributes exactly 0.5).
    """
    tau = cfg.tau if isinstance(cfg, SoftMaskConfig) else float(cfg)
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    values = np.asarray(list(d), dtype=np.float64)
    n = len(values) + 1
    weights = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        weights[i, max(i - 1, 0) : i + 2] = 1.0
        if i >= 2:
            # gaps i-2, i-3, ..., 0 reach columns i-2, i-3, ..., 0
            factors = soft_compare(values[i - 1], values[i - 2 :: -1], tau)
            weights[i, i - 2 :: -1] = np.cumprod(factors)
        if i + 2 <= n - 1:
            factors = soft_compare(values[i], values[i + 1 :], tau)
            weights[i, i + 2 :] = np.cumprod(factors)
    return SoftMask(weights)
