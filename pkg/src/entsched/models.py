"""Differentiable models over flat parameter vectors.

Parameters are kept flat so that a whole network's models stack into an
``(n_nodes, size)`` array and mixing is a single matrix product.
"""
from __future__ import annotations

import numpy as np


def _softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(len(y)), y]))
    probs = np.exp(z - logsum[:, None])
    probs[np.arange(len(y)), y] -= 1.0
    return loss, probs / len(y)


def _xent_per_sample(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return np.log(np.exp(z).sum(axis=1)) - z[np.arange(len(y)), y]


class LogisticModel:
    """Multinomial logistic regression; ``theta = [W (C x dim) row-major, b (C)]``.

    The L2 penalty ``(l2 / 2) * ||W||^2`` covers weights only.
    """

    def __init__(self, num_classes: int, dim: int, l2: float = 0.0):
        self.num_classes = num_classes
        self.dim = dim
        self.l2 = l2
        self.size = num_classes * (dim + 1)

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cd = self.num_classes * self.dim
        return theta[:cd].reshape(self.num_classes, self.dim), theta[cd:]

    def init(self, gen: np.random.Generator | None = None) -> np.ndarray:
        return np.zeros(self.size)

    def logits(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        w, b = self.unpack(theta)
        return x @ w.T + b

    def penalty(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        w, _ = self.unpack(theta)
        grad = np.zeros_like(theta)
        grad[: w.size] = self.l2 * w.ravel()
        return 0.5 * self.l2 * float(np.sum(w * w)), grad

    def loss_grad(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        if len(y) == 0:
            raise ValueError("empty batch")
        loss, dlogits = _softmax_xent(self.logits(theta, x), y)
        reg, grad = self.penalty(theta)
        grad[: self.num_classes * self.dim] += (dlogits.T @ x).ravel()
        grad[self.num_classes * self.dim:] += dlogits.sum(axis=0)
        return loss + reg, grad

    def loss(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None) -> float:
        """Mean (or ``weights``-weighted sum of) per-sample cross-entropy, plus the penalty."""
        per = _xent_per_sample(self.logits(theta, x), y)
        data = float(per.mean() if weights is None else per @ weights)
        return data + self.penalty(theta)[0]

    def predict(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(theta, x), axis=1)


class MLPModel:
    """One hidden tanh layer; ``theta = [W1 (h x dim), b1 (h), W2 (C x h), b2 (C)]``."""

    def __init__(self, num_classes: int, dim: int, hidden: int = 64, l2: float = 0.0):
        self.num_classes = num_classes
        self.dim = dim
        self.hidden = hidden
        self.l2 = l2
        self.shapes = [(hidden, dim), (hidden,), (num_classes, hidden), (num_classes,)]
        self.size = sum(int(np.prod(s)) for s in self.shapes)

    def unpack(self, theta: np.ndarray) -> list[np.ndarray]:
        out, at = [], 0
        for shape in self.shapes:
            k = int(np.prod(shape))
            out.append(theta[at:at + k].reshape(shape))
            at += k
        return out

    def init(self, gen: np.random.Generator) -> np.ndarray:
        w1 = gen.standard_normal((self.hidden, self.dim)) / np.sqrt(self.dim)
        w2 = gen.standard_normal((self.num_classes, self.hidden)) / np.sqrt(self.hidden)
        return np.concatenate([w1.ravel(), np.zeros(self.hidden), w2.ravel(), np.zeros(self.num_classes)])

    def _forward(self, theta, x):
        w1, b1, w2, b2 = self.unpack(theta)
        h = np.tanh(x @ w1.T + b1)
        return h, h @ w2.T + b2

    def penalty(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        w1, _, w2, _ = self.unpack(theta)
        value = 0.5 * self.l2 * float(np.sum(w1 * w1) + np.sum(w2 * w2))
        grad = np.concatenate([self.l2 * w1.ravel(), np.zeros(self.hidden), self.l2 * w2.ravel(), np.zeros(self.num_classes)])
        return value, grad

    def loss_grad(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        if len(y) == 0:
            raise ValueError("empty batch")
        w1, b1, w2, b2 = self.unpack(theta)
        h, logits = self._forward(theta, x)
        loss, dlogits = _softmax_xent(logits, y)
        dh = (dlogits @ w2) * (1.0 - h * h)
        reg, grad = self.penalty(theta)
        grad += np.concatenate([(dh.T @ x).ravel(), dh.sum(axis=0), (dlogits.T @ h).ravel(), dlogits.sum(axis=0)])
        return loss + reg, grad

    def loss(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None) -> float:
        per = _xent_per_sample(self._forward(theta, x)[1], y)
        data = float(per.mean() if weights is None else per @ weights)
        return data + self.penalty(theta)[0]

    def predict(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.argmax(self._forward(theta, x)[1], axis=1)


def make_model(kind: str, num_classes: int, dim: int, l2: float = 0.0, hidden: int = 64):
    if kind == "logistic":
        return LogisticModel(num_classes, dim, l2)
    if kind == "mlp":
        return MLPModel(num_classes, dim, hidden, l2)
    raise ValueError(f"unknown model {kind!r}")
