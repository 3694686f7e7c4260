"""Private agent objectives: separable quadratics and a small MLP classifier.

Every objective exposes ``dim``, ``evaluate(x)`` and ``gradient(x)``.
Deterministic objectives are pure; :class:`MlpObjective` owns an RNG stream
for mini-batch sampling and must not be shared between runs.
"""
from __future__ import annotations

import numpy as np

from .counters import add_flops

__all__ = [
    "DiagonalQuadratic",
    "SumObjective",
    "MlpObjective",
    "exp1_objective",
    "exp1_objectives",
    "global_objective",
    "mlp_objective",
    "EXP1_FORMS",
]

EXP1_FORMS = ("squared", "literal")


class DiagonalQuadratic:
    """``f(x) = 0.5 * sum_j curvature_j * (x_j - center_j)**2 + offset``."""

    stochastic = False

    def __init__(self, curvature, center, offset=0.0, name=None):
        self.curvature = np.asarray(curvature, dtype=np.float64)
        self.center = np.asarray(center, dtype=np.float64)
        if self.curvature.shape != self.center.shape or self.curvature.ndim != 1:
            raise ValueError("curvature and center must be 1-D vectors of equal length")
        self.offset = float(offset)
        self.dim = self.curvature.size
        self.name = name or "quadratic"

    def evaluate(self, x):
        d = np.asarray(x, dtype=np.float64) - self.center
        return 0.5 * float(np.dot(self.curvature * d, d)) + self.offset

    def gradient(self, x):
        add_flops(2 * self.dim, "gradient")
        return self.curvature * (x - self.center)

    def hessian_diagonal(self):
        return self.curvature.copy()

    def minimizer(self):
        if np.any(self.curvature <= 0):
            return None
        return self.center.copy()

    def describe(self):
        return {
            "name": self.name,
            "curvature": self.curvature.tolist(),
            "center": self.center.tolist(),
            "offset": self.offset,
        }


def exp1_objective(agent_index: int, form: str = "squared") -> DiagonalQuadratic:
    """One of the four 2-D quadratics of the ill-conditioned study (1-based index).

    f1 = 0.5(2 - x1)^2 + 0.005 x2^2 and f2 = 0.5(2 + x1)^2 + 0.005 x2^2.
    For f3, f4 the ``"squared"`` form is 0.5 x1^2 + 0.005(2 -/+ x2)^2; the
    ``"literal"`` form 0.5 x1^2 + 0.005(2 -/+ x2^2) is kept for comparison.
    """
    if form not in EXP1_FORMS:
        raise ValueError(f"form must be one of {EXP1_FORMS}, got {form!r}")
    if agent_index == 1:
        return DiagonalQuadratic([1.0, 0.01], [2.0, 0.0], name="f1")
    if agent_index == 2:
        return DiagonalQuadratic([1.0, 0.01], [-2.0, 0.0], name="f2")
    if agent_index in (3, 4):
        sign = 1.0 if agent_index == 3 else -1.0
        name = f"f{agent_index}"
        if form == "squared":
            return DiagonalQuadratic([1.0, 0.01], [0.0, 2.0 * sign], name=name)
        # 0.005 * (2 - x2^2) = -0.005 x2^2 + 0.01, and the mirror image for f4
        return DiagonalQuadratic([1.0, -0.01 * sign], [0.0, 0.0], offset=0.01, name=name + "_literal")
    raise ValueError(f"agent_index must be in 1..4, got {agent_index}")


def exp1_objectives(form: str = "squared"):
    return [exp1_objective(i, form) for i in range(1, 5)]


class SumObjective:
    """Sum of objectives sharing one dimension."""

    def __init__(self, parts):
        self.parts = list(parts)
        self.dim = self.parts[0].dim
        self.stochastic = any(getattr(p, "stochastic", False) for p in self.parts)

    def evaluate(self, x):
        total = 0.0
        for p in self.parts:
            total += p.evaluate(x)
        return total

    def gradient(self, x):
        g = self.parts[0].gradient(x)
        for p in self.parts[1:]:
            g = g + p.gradient(x)
        return g


def global_objective(parts) -> SumObjective:
    """The network objective ``sum_i f_i``.

    Raises:
        ValueError: ``parts`` is empty or dimensions differ.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("global objective needs at least one part")
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise ValueError(f"parts disagree on dimension: {sorted(dims)}")
    return SumObjective(parts)


class MlpObjective:
    """Softmax cross-entropy of a tanh MLP over one agent's data partition.

    Parameters live in one flat vector: for each layer the ``(fan_in, fan_out)``
    weight matrix in row-major order followed by its bias.

    ``gradient(x)`` draws the next mini-batch (without replacement inside an
    epoch, reshuffled each epoch, short tail batch dropped). ``evaluate(x)``
    is the full-partition mean loss; ``evaluate_batch`` scores one batch.
    """

    stochastic = True

    def __init__(self, layer_sizes, features, labels, batch_size, rng):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        n_samples = self.labels.size
        if n_samples == 0:
            raise ValueError("data partition is empty")
        if self.features.shape != (n_samples, self.layer_sizes[0]):
            raise ValueError(f"features shape {self.features.shape} does not match "
                             f"({n_samples}, {self.layer_sizes[0]})")
        n_classes = self.layer_sizes[-1]
        if self.labels.min() < 0 or self.labels.max() >= n_classes:
            raise ValueError(f"labels must lie in 0..{n_classes - 1}")
        if not 1 <= batch_size <= n_samples:
            raise ValueError(f"batch_size must be in 1..{n_samples}, got {batch_size}")
        self.batch_size = int(batch_size)
        self.rng = rng
        self._shapes = []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self._shapes.append((offset, fan_in, fan_out))
            offset += fan_in * fan_out + fan_out
        self.dim = offset
        self._perm = None
        self._pos = 0
        self.epoch = 0
        self.last_batch_loss = None

    def unpack(self, x):
        """List of ``(W, b)`` views into ``x``."""
        layers = []
        for offset, fan_in, fan_out in self._shapes:
            w_end = offset + fan_in * fan_out
            layers.append((x[offset:w_end].reshape(fan_in, fan_out), x[w_end:w_end + fan_out]))
        return layers

    def pack(self, layers):
        return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in layers])

    def init_params(self, rng):
        """Glorot-uniform weights, zero biases."""
        layers = []
        for _, fan_in, fan_out in self._shapes:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
        return self.pack(layers)

    def _forward(self, layers, features, labels):
        activations = [features]
        a = features
        for w, b in layers[:-1]:
            a = np.tanh(a @ w + b)
            activations.append(a)
        w_out, b_out = layers[-1]
        logits = a @ w_out + b_out
        logits = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(logits).sum(axis=1))
        loss = float(np.mean(log_norm - logits[np.arange(labels.size), labels]))
        return activations, logits, log_norm, loss

    def loss(self, x, features, labels):
        layers = self.unpack(np.asarray(x, dtype=np.float64))
        return self._forward(layers, features, labels)[3]

    def loss_and_grad(self, x, features, labels):
        layers = self.unpack(np.asarray(x, dtype=np.float64))
        activations, logits, log_norm, loss = self._forward(layers, features, labels)
        rows = np.arange(labels.size)
        probs = np.exp(logits - log_norm[:, None])
        delta = probs
        delta[rows, labels] -= 1.0
        delta /= labels.size
        grads = []
        for li in range(len(layers) - 1, -1, -1):
            w, _ = layers[li]
            a_in = activations[li]
            grads.append((a_in.T @ delta, delta.sum(axis=0)))
            if li > 0:
                delta = (delta @ w.T) * (1.0 - a_in * a_in)
        grads.reverse()
        add_flops(6 * labels.size * sum(fi * fo for _, fi, fo in self._shapes), "gradient")
        return loss, self.pack(grads)

    def _next_batch(self):
        n = self.labels.size
        if self._perm is None or self._pos + self.batch_size > n:
            self._perm = self.rng.permutation(n)
            self._pos = 0
            self.epoch += 1
        idx = self._perm[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return idx

    def gradient(self, x):
        idx = self._next_batch()
        loss, grad = self.loss_and_grad(x, self.features[idx], self.labels[idx])
        self.last_batch_loss = loss
        return grad

    def evaluate_batch(self, x, idx):
        return self.loss(x, self.features[idx], self.labels[idx])

    def evaluate(self, x):
        return self.loss(x, self.features, self.labels)

    def full_loss_and_grad(self, x):
        return self.loss_and_grad(x, self.features, self.labels)


def mlp_objective(layer_sizes, features, labels, batch_size, rng) -> MlpObjective:
    return MlpObjective(layer_sizes, features, labels, batch_size, rng)
