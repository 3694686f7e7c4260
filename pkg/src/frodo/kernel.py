"""Power-law memory weights for the fractional-order gradient memory."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .counters import add_flops

__all__ = ["MemoryKernel", "build_kernel", "memory_term"]


@dataclass(frozen=True)
class MemoryKernel:
    """Normalized weights ``weights[n-1] = n ** (lam - 1)`` for ``n = 1..horizon``.

    The unnormalized weight carries a ``1/Gamma(lam)`` factor and peaks at
    ``n = 1`` for ``lam`` in (0, 1); dividing by that peak cancels both, so
    the gamma function never enters here.
    """

    lam: float
    horizon: int
    weights: np.ndarray = field(repr=False, compare=False)


def build_kernel(lam: float, horizon: int) -> MemoryKernel:
    """Precompute the memory weights for order ``lam`` and memory length ``horizon``.

    Raises:
        ValueError: ``lam`` not strictly inside (0, 1), or ``horizon < 1``.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in the open interval (0, 1), got {lam}")
    if int(horizon) != horizon or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon}")
    horizon = int(horizon)
    n = np.arange(1, horizon + 1, dtype=np.float64)
    weights = n ** (lam - 1.0)
    weights.setflags(write=False)
    return MemoryKernel(lam, horizon, weights)


def memory_term(kernel: MemoryKernel, history, dim: int | None = None) -> np.ndarray:
    """Weighted sum of past gradients, most recent first.

    ``history[0]`` gets weight 1, ``history[1]`` weight ``2**(lam-1)`` and so
    on. Entries past the kernel horizon are ignored; an empty history yields
    the zero vector of length ``dim`` (or the array's column count).

    Args:
        kernel: Precomputed weights.
        history: Sequence of equal-length gradient vectors or an ``(m, n)``
            array, newest first.
    """
    if isinstance(history, np.ndarray):
        stacked = np.asarray(history, dtype=np.float64)
        if stacked.ndim != 2:
            raise ValueError("history array must be 2-D (entries x dimension)")
    else:
        vecs = [np.asarray(h, dtype=np.float64) for h in history]
        if not vecs:
            return np.zeros(dim or 0)
        shapes = {v.shape for v in vecs}
        if len(shapes) != 1 or vecs[0].ndim != 1:
            raise ValueError(f"history vectors must share one 1-D shape, got {sorted(shapes)}")
        stacked = np.stack(vecs)
    m = min(stacked.shape[0], kernel.horizon)
    if m == 0:
        return np.zeros(stacked.shape[1])
    add_flops(2 * m * stacked.shape[1], "memory")
    return kernel.weights[:m] @ stacked[:m]
