"""Small classifiers with hand-written gradients over flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-example cross-entropy, computed with log-sum-exp."""
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return log_norm - z[np.arange(labels.size), labels]


@dataclass(frozen=True)
class SoftmaxRegression:
    dim: int
    n_classes: int

    @property
    def param_count(self) -> int:
        return (self.dim + 1) * self.n_classes

    def init(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.param_count)

    def _unpack(self, w: np.ndarray):
        d, c = self.dim, self.n_classes
        return w[: d * c].reshape(d, c), w[d * c:]

    def logits(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        weights, bias = self._unpack(w)
        return x @ weights + bias

    def loss(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
        """Mean cross-entropy."""
        return float(cross_entropy(self.logits(w, x), y).mean())

    def loss_and_grad(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        logits = self.logits(w, x)
        m = y.size
        p = softmax(logits)
        p[np.arange(m), y] -= 1.0
        p /= m
        grad = np.concatenate([(x.T @ p).ravel(), p.sum(axis=0)])
        return float(cross_entropy(logits, y).mean()), grad


@dataclass(frozen=True)
class OneHiddenLayer:
    """tanh hidden layer followed by a softmax output."""

    dim: int
    n_classes: int
    hidden: int

    @property
    def param_count(self) -> int:
        return (self.dim + 1) * self.hidden + (self.hidden + 1) * self.n_classes

    def init(self, rng: np.random.Generator) -> np.ndarray:
        w1 = rng.standard_normal((self.dim, self.hidden)) / np.sqrt(self.dim)
        w2 = rng.standard_normal((self.hidden, self.n_classes)) / np.sqrt(self.hidden)
        return np.concatenate([w1.ravel(), np.zeros(self.hidden), w2.ravel(), np.zeros(self.n_classes)])

    def _unpack(self, w: np.ndarray):
        d, h, c = self.dim, self.hidden, self.n_classes
        i = 0
        w1 = w[i: i + d * h].reshape(d, h); i += d * h
        b1 = w[i: i + h]; i += h
        w2 = w[i: i + h * c].reshape(h, c); i += h * c
        b2 = w[i: i + c]
        return w1, b1, w2, b2

    def logits(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._unpack(w)
        return np.tanh(x @ w1 + b1) @ w2 + b2

    def loss(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
        return float(cross_entropy(self.logits(w, x), y).mean())

    def loss_and_grad(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        w1, b1, w2, b2 = self._unpack(w)
        a = np.tanh(x @ w1 + b1)
        logits = a @ w2 + b2
        m = y.size
        dz = softmax(logits)
        dz[np.arange(m), y] -= 1.0
        dz /= m
        da = (dz @ w2.T) * (1.0 - a * a)
        grad = np.concatenate([(x.T @ da).ravel(), da.sum(axis=0), (a.T @ dz).ravel(), dz.sum(axis=0)])
        return float(cross_entropy(logits, y).mean()), grad


def build_model(dim: int, n_classes: int, hidden: int = 0):
    if hidden > 0:
        return OneHiddenLayer(dim, n_classes, hidden)
    return SoftmaxRegression(dim, n_classes)


def proximal_objective(model, w: np.ndarray, anchor: np.ndarray, x: np.ndarray, y: np.ndarray,
                       proximal_weight: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus ``proximal_weight * ||w - anchor||^2`` and its gradient."""
    loss, grad = model.loss_and_grad(w, x, y)
    diff = w - anchor
    return loss + proximal_weight * float(diff @ diff), grad + 2.0 * proximal_weight * diff
