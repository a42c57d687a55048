"""Dense layers, softmax/cross-entropy and plain SGD with analytic gradients.

Arrays are float64 numpy arrays. Functions accept a single vector or a batch
with a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, MutableMapping

import numpy as np

from ..errors import IndexOutOfRange, NonFinite, ShapeMismatch

ACTIVATIONS = ("LINEAR", "RELU", "TANH", "SIGMOID")


def check_finite(x: np.ndarray, what: str = "value") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"non-finite {what}")
    return x


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "LINEAR"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeMismatch(f"W {self.W.shape} and b {self.b.shape} disagree")

    @classmethod
    def init(cls, rng: np.random.Generator, n_in: int, n_out: int, activation: str = "LINEAR"):
        return cls(glorot(rng, n_out, n_in), np.zeros(n_out), activation)

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "RELU":
        return np.maximum(z, 0.0)
    if activation == "TANH":
        return np.tanh(z)
    if activation == "SIGMOID":
        return sigmoid(z)
    return z


def _activation_grad(z: np.ndarray, y: np.ndarray, activation: str) -> np.ndarray:
    if activation == "RELU":
        return (z > 0).astype(np.float64)
    if activation == "TANH":
        return 1.0 - y * y
    if activation == "SIGMOID":
        return y * (1.0 - y)
    return np.ones_like(z)


def _check_input(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.n_in:
        raise ShapeMismatch(f"layer expects {layer.n_in} inputs, got {x.shape[-1]}")
    return x


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """act(W x + b)."""
    x = check_finite(_check_input(layer, x), "dense input")
    return check_finite(_activate(x @ layer.W.T + layer.b, layer.activation), "dense output")


def dense_backward(layer: DenseLayer, x: np.ndarray, upstream: np.ndarray):
    """Return (grad_x, grad_W, grad_b); batched inputs have their gradients summed."""
    x = _check_input(layer, x)
    z = x @ layer.W.T + layer.b
    y = _activate(z, layer.activation)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != y.shape:
        raise ShapeMismatch(f"upstream gradient {upstream.shape} vs output {y.shape}")
    gz = upstream * _activation_grad(z, y, layer.activation)
    x2 = x.reshape(-1, layer.n_in)
    gz2 = gz.reshape(-1, layer.n_out)
    grad_W = gz2.T @ x2
    grad_b = gz2.sum(axis=0)
    grad_x = gz @ layer.W
    for g in (grad_x, grad_W, grad_b):
        check_finite(g, "dense gradient")
    return grad_x, grad_W, grad_b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ShapeMismatch("softmax of an empty vector")
    check_finite(logits, "logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    check_finite(logits, "logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(probs: np.ndarray, target: int, ignore_index: int | None = None) -> float:
    """-ln probs[target]; a target equal to ``ignore_index`` contributes nothing."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= target < probs.shape[-1]:
        raise IndexOutOfRange(f"target {target} outside [0, {probs.shape[-1]})")
    if ignore_index is not None and target == ignore_index:
        return 0.0
    return float(-np.log(probs[target]))


def softmax_cross_entropy(logits: np.ndarray, targets, ignore_index: int | None = None):
    """Summed cross-entropy over rows of ``logits`` and its gradient w.r.t. the logits.

    The gradient of each unmasked row is probs - onehot(target); masked rows
    get zero loss and zero gradient.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    n, k = logits.shape
    if targets.shape != (n,):
        raise ShapeMismatch(f"{n} logit rows but {targets.shape} targets")
    if np.any(targets < 0) or np.any(targets >= k):
        raise IndexOutOfRange("target index out of range")
    keep = np.ones(n, dtype=bool) if ignore_index is None else targets != ignore_index
    logp = log_softmax(logits)
    rows = np.arange(n)
    loss = -float(logp[rows[keep], targets[keep]].sum())
    grad = np.exp(logp)
    grad[rows, targets] -= 1.0
    grad[~keep] = 0.0
    return loss, grad


def binary_cross_entropy_with_logits(z: np.ndarray, y: np.ndarray):
    """Summed BCE of sigmoid(z) against labels y, and d loss / d z = sigmoid(z) - y."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    # log(1 + exp(-|z|)) form avoids overflow
    loss = float(np.sum(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))
    return loss, sigmoid(z) - y


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def sgd_step(params: MutableMapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
             lr: float, clip: float | None = None) -> MutableMapping[str, np.ndarray]:
    """In-place p <- p - lr * g, after optional global-norm clipping of the gradients."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    scale = 1.0
    if clip is not None:
        norm = global_norm(grads)
        if not np.isfinite(norm):
            raise NonFinite("non-finite gradient norm")
        if norm > clip:
            scale = clip / norm
    for name in sorted(grads):
        g = grads[name]
        check_finite(g, f"gradient {name}")
        params[name] -= (lr * scale) * g
        check_finite(params[name], f"parameter {name}")
    return params
