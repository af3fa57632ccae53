"""Mini-batch training loop, optimizers, and per-epoch history.

Everything downstream of the config seed is deterministic: batch order
comes from one PCG64 generator, parameters update in a fixed order, and a
re-run with the same seed reproduces the parameter trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedError, EmptyDatasetError
from ..metrics import Metrics, confusion_matrix, metrics_from_confusion
from .network import Network


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 35
    epochs: int = 10
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or not self.learning_rate > 0:
            raise ValueError("batch_size >= 1, epochs >= 0, learning_rate > 0 required")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class History:
    """Per-epoch losses and test-split metrics."""

    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    precision: list[float] = field(default_factory=list)
    recall: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def append(self, train_loss: float, m: Metrics) -> None:
        self.train_loss.append(train_loss)
        self.test_loss.append(m.loss)
        self.accuracy.append(m.accuracy)
        self.precision.append(m.macro_precision)
        self.recall.append(m.macro_recall)

    def rows(self) -> list[tuple[int, float, float, float, float, float]]:
        return [
            (e + 1, self.train_loss[e], self.test_loss[e], self.accuracy[e],
             self.precision[e], self.recall[e])
            for e in range(len(self))
        ]


@dataclass
class LabeledTensors:
    """A batch-ready dataset: stacked image tensors plus integer labels."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if self.x.ndim != 4 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"bad dataset shapes x={self.x.shape}, y={self.y.shape}")

    def __len__(self) -> int:
        return self.y.shape[0]


class SGD:
    def __init__(self, params, lr: float):
        self.params = params
        self.lr = lr

    def step(self):
        for _, value, grad in self.params:
            value -= self.lr * grad


class Adam:
    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(v) for _, v, _ in params]
        self.v = [np.zeros_like(v) for _, v, _ in params]
        self.t = 0

    def step(self):
        self.t += 1
        b1t = 1.0 - self.b1**self.t
        b2t = 1.0 - self.b2**self.t
        for (_, value, grad), m, v in zip(self.params, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * grad
            v *= self.b2
            v += (1.0 - self.b2) * grad * grad
            value -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def make_optimizer(net: Network, cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(net.params(), cfg.learning_rate)
    return Adam(net.params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)


def evaluate_network(net: Network, data: LabeledTensors, batch_size: int = 128):
    """Mean loss, metrics, and confusion matrix on a labeled set."""
    k = net.n_classes
    conf = np.zeros((k, k), dtype=np.int64)
    loss_sum = 0.0
    for start in range(0, len(data), batch_size):
        bx = data.x[start : start + batch_size]
        by = data.y[start : start + batch_size]
        probs = net.forward(bx)
        preds = np.argmax(probs, axis=1)
        conf += confusion_matrix(by, preds, k)
        loss_sum += net.loss(bx, by) * len(by)
    return metrics_from_confusion(conf, loss_sum / len(data)), conf


def train(
    net: Network,
    train_data: LabeledTensors,
    test_data: LabeledTensors,
    cfg: TrainConfig,
) -> History:
    """Shuffled mini-batch training; returns the per-epoch history.

    Raises DivergedError as soon as a batch loss stops being finite.
    """
    if len(train_data) == 0 or len(test_data) == 0:
        raise EmptyDatasetError("train and test sets must be non-empty")
    history = History()
    if cfg.epochs == 0:
        return history
    rng = np.random.default_rng(cfg.seed)
    opt = make_optimizer(net, cfg)
    n = len(train_data)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            take = perm[start : start + cfg.batch_size]
            net.zero_grads()
            loss = net.loss_and_backward(train_data.x[take], train_data.y[take])
            if not np.isfinite(loss):
                raise DivergedError(f"loss became {loss} in epoch {epoch + 1}")
            opt.step()
            loss_sum += loss * len(take)
        test_metrics, _ = evaluate_network(net, test_data)
        history.append(loss_sum / n, test_metrics)
    return history
