"""Per-agent descent stage: fractional memory descent and its baselines.

All variants share one entry point, :func:`descent_update`. The fractional
rule is ``x <- x - alpha*g - beta*M`` with ``M`` the power-law weighted sum of
the agent's previous gradients; heavy ball is the same rule with a one-step
memory, and ``no_memory``/``plain_gd`` drop the memory term.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import core
from .counters import add_flops
from .kernel import MemoryKernel, build_kernel

__all__ = [
    "VARIANTS",
    "MEMORY_VARIANTS",
    "DivergenceError",
    "OptimizerConfig",
    "GradientHistory",
    "AgentState",
    "kernel_for",
    "init_agent_state",
    "gradient_point",
    "descent_update",
]

VARIANTS = ("fractional", "heavy_ball", "no_memory", "nesterov", "adam", "plain_gd")
MEMORY_VARIANTS = ("fractional", "heavy_ball")

DIVERGENCE_NORM = 1e8


class DivergenceError(FloatingPointError):
    """Raised when an iterate or gradient leaves the finite/bounded region."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters for one update rule.

    ``beta`` is the memory feedback gain (forced to 0 for ``no_memory`` and
    ``plain_gd``), ``lam`` and ``horizon`` shape the fractional memory, and
    ``momentum`` is Nesterov's velocity decay.
    """

    variant: str
    alpha: float
    beta: float = 0.0
    lam: Optional[float] = None
    horizon: int = 1
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant: unknown {self.variant!r}, expected one of {VARIANTS}")
        if not self.alpha > 0:
            raise ValueError(f"alpha: must be > 0, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta: must be >= 0, got {self.beta}")
        if self.variant == "fractional":
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValueError(f"lambda: must lie in (0, 1) for the fractional variant, got {self.lam}")
            if int(self.horizon) != self.horizon or self.horizon < 1:
                raise ValueError(f"horizon: must be a positive integer, got {self.horizon}")
        if self.variant == "nesterov" and not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum: must lie in [0, 1), got {self.momentum}")
        if self.variant == "adam":
            if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
                raise ValueError("adam_beta1/adam_beta2: must lie in [0, 1)")
            if not self.adam_eps > 0:
                raise ValueError(f"adam_eps: must be > 0, got {self.adam_eps}")

    @property
    def effective_beta(self):
        return self.beta if self.variant in MEMORY_VARIANTS else 0.0

    @property
    def effective_horizon(self):
        if self.variant == "heavy_ball":
            return 1
        if self.variant == "fractional":
            return int(self.horizon)
        return 0

    def to_dict(self):
        """Only the fields that matter for this variant."""
        d = {"variant": self.variant, "alpha": self.alpha}
        if self.variant in MEMORY_VARIANTS:
            d["beta"] = self.beta
            d["horizon"] = self.effective_horizon
        if self.variant == "fractional":
            d["lambda"] = self.lam
        if self.variant == "nesterov":
            d["momentum"] = self.momentum
        if self.variant == "adam":
            d.update(beta1=self.adam_beta1, beta2=self.adam_beta2, eps=self.adam_eps)
        return d


class GradientHistory:
    """Ring buffer of at most ``capacity`` gradients, newest at ``head``."""

    def __init__(self, capacity, dim):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.dim = int(dim)
        self.ring = np.zeros((self.capacity, self.dim))
        self.head = -1
        self.count = 0

    def __len__(self):
        return self.count

    def push(self, grad):
        self.head = (self.head + 1) % self.capacity
        self.ring[self.head] = grad
        if self.count < self.capacity:
            self.count += 1

    def newest_first(self):
        """Copy of the stored gradients as an ``(count, dim)`` array."""
        rows = (self.head - np.arange(self.count)) % self.capacity
        return self.ring[rows].copy()

    def weighted_sum(self, weights, out=None):
        if out is None:
            out = np.empty(self.dim)
        core.weighted_ring_sum(weights, self.ring, self.head, self.count, out)
        add_flops(2 * self.count * self.dim, "memory")
        return out


@dataclass
class AgentState:
    """One agent's iterate plus whatever its update rule carries between rounds."""

    x: np.ndarray
    history: Optional[GradientHistory] = None
    velocity: Optional[np.ndarray] = None
    moment1: Optional[np.ndarray] = None
    moment2: Optional[np.ndarray] = None
    steps: int = 0
    scratch: Optional[np.ndarray] = field(default=None, repr=False)


def kernel_for(cfg: OptimizerConfig) -> Optional[MemoryKernel]:
    """The memory kernel a variant needs, or None."""
    if cfg.variant == "fractional":
        return build_kernel(cfg.lam, cfg.horizon)
    if cfg.variant == "heavy_ball":
        # horizon 1: the single weight is 1 for every order, so any lambda will do
        return build_kernel(0.5, 1)
    return None


def init_agent_state(x0, cfg: OptimizerConfig) -> AgentState:
    x = np.array(x0, dtype=np.float64)
    state = AgentState(x=x)
    if cfg.variant in MEMORY_VARIANTS:
        state.history = GradientHistory(cfg.effective_horizon, x.size)
        state.scratch = np.empty(x.size)
    elif cfg.variant == "nesterov":
        state.velocity = np.zeros_like(x)
    elif cfg.variant == "adam":
        state.moment1 = np.zeros_like(x)
        state.moment2 = np.zeros_like(x)
    return state


def gradient_point(state: AgentState, cfg: OptimizerConfig) -> np.ndarray:
    """Where the variant evaluates its gradient (Nesterov looks ahead)."""
    if cfg.variant == "nesterov":
        return state.x - cfg.alpha * cfg.momentum * state.velocity
    return state.x


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite {what}")


def descent_update(state: AgentState, grad, cfg: OptimizerConfig,
                   kernel: Optional[MemoryKernel] = None) -> AgentState:
    """Apply one descent step in place and return ``state``.

    The memory term uses the history as it stood before this round; ``grad``
    is pushed afterwards, evicting the oldest entry once the buffer is full.

    Raises:
        ValueError: Dimension mismatch, or a memory variant without a kernel.
        DivergenceError: Non-finite gradient or iterate, or ``|x| > 1e8``.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.x.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match state {state.x.shape}")
    _check_finite(grad, "gradient")
    n = state.x.size
    variant = cfg.variant

    if variant in MEMORY_VARIANTS:
        if kernel is None:
            raise ValueError(f"variant {variant!r} needs a memory kernel")
        hist = state.history
        if kernel.horizon < hist.capacity:
            raise ValueError("kernel horizon shorter than the history buffer")
        core.memory_descent(state.x, grad, kernel.weights, hist.ring, hist.head, hist.count,
                            float(cfg.alpha), float(cfg.beta), state.scratch)
        add_flops(2 * hist.count * n + 4 * n, "memory_descent")
        hist.push(grad)
    elif variant in ("no_memory", "plain_gd"):
        state.x = state.x - cfg.alpha * grad
        add_flops(2 * n, "descent")
    elif variant == "nesterov":
        # grad was evaluated at the look-ahead point x - alpha*momentum*v
        state.velocity = cfg.momentum * state.velocity + grad
        state.x = state.x - cfg.alpha * state.velocity
        add_flops(4 * n, "descent")
    elif variant == "adam":
        state.steps += 1
        b1, b2 = cfg.adam_beta1, cfg.adam_beta2
        state.moment1 = b1 * state.moment1 + (1.0 - b1) * grad
        state.moment2 = b2 * state.moment2 + (1.0 - b2) * grad * grad
        m_hat = state.moment1 / (1.0 - b1 ** state.steps)
        v_hat = state.moment2 / (1.0 - b2 ** state.steps)
        state.x = state.x - cfg.alpha * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        add_flops(12 * n, "descent")

    _check_finite(state.x, "iterate")
    if float(np.dot(state.x, state.x)) > DIVERGENCE_NORM ** 2:
        raise DivergenceError(f"iterate norm exceeded {DIVERGENCE_NORM:g}")
    return state
