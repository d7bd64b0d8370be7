"""Logistic-regression readout trained with per-sample SGD.

Training minimises the per-class sigmoid binary cross-entropy against one-hot
targets; inference takes the argmax of the softmax over the same logits.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .variability import READOUT

CHECKPOINT_MAGIC = "memrc-readout v1"

SHUFFLE = 1
INIT = 2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.02
    seed: int = 0
    shuffle: bool = True
    bias: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class ReadoutWeights:
    w: np.ndarray
    bias: bool = False

    def __post_init__(self):
        self.w = np.ascontiguousarray(self.w, dtype=float)
        if self.w.ndim != 2:
            raise ValueError("weights must be a 2-D matrix")

    @property
    def n_features(self) -> int:
        return self.w.shape[0] - (1 if self.bias else 0)

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    def copy(self) -> "ReadoutWeights":
        return ReadoutWeights(self.w.copy(), self.bias)


def init_weights(n_features: int, n_classes: int, seed: int = 0, bias: bool = False) -> ReadoutWeights:
    if n_features < 1 or n_classes < 1:
        raise ValueError("need at least one feature and one class")
    rng = np.random.default_rng([seed, READOUT, INIT])
    rows = n_features + (1 if bias else 0)
    return ReadoutWeights(rng.uniform(-0.01, 0.01, (rows, n_classes)), bias)


def _design(features, bias: bool) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[None]
    if bias:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return np.ascontiguousarray(X)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-np.logaddexp(0.0, -z))


def softmax(z):
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sample_loss(w, f, label: int) -> float:
    """Summed per-class binary cross-entropy for one sample."""
    z = np.asarray(f, dtype=float) @ np.asarray(w)
    y = np.zeros(z.shape[-1])
    y[label] = 1.0
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def sample_gradient(w, f, label: int) -> np.ndarray:
    """d(sample_loss)/dw = f (sigmoid(w^T f) - y)^T."""
    f = np.asarray(f, dtype=float)
    p = sigmoid(f @ np.asarray(w))
    p[label] -= 1.0
    return np.outer(f, p)


def _check(X, labels, w: ReadoutWeights):
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("training batch is empty")
    if X.shape[0] != labels.shape[0]:
        raise ValueError("features and labels disagree in length")
    if X.shape[1] != w.w.shape[0]:
        raise ValueError(f"{X.shape[1]} features for a {w.w.shape[0]}-row weight matrix")
    if labels.min() < 0 or labels.max() >= w.n_classes:
        raise ValueError("label outside [0, n_classes)")
    return labels


def train(features, labels, w0: ReadoutWeights, cfg: TrainConfig,
          on_epoch: Optional[Callable[[int, float], None]] = None) -> ReadoutWeights:
    """Per-sample SGD; sample order is reshuffled from ``cfg.seed`` every epoch.

    ``on_epoch(epoch, mean_loss)`` is called after each epoch if given.
    """
    if w0.bias != cfg.bias:
        raise ValueError("weight matrix and train config disagree about the bias row")
    X = _design(features, cfg.bias)
    y = _check(X, labels, w0)
    w = w0.copy()
    rng = np.random.default_rng([cfg.seed, READOUT, SHUFFLE])
    order = np.arange(X.shape[0], dtype=np.int64)
    for epoch in range(cfg.epochs):
        if cfg.shuffle:
            order = rng.permutation(X.shape[0]).astype(np.int64)
        loss = kernels.sgd_epoch(w.w, X, y, order, cfg.learning_rate, on_epoch is not None)
        if on_epoch is not None:
            on_epoch(epoch, loss / X.shape[0])
    return w


def logits(w: ReadoutWeights, features) -> np.ndarray:
    return _design(features, w.bias) @ w.w


def predict(w: ReadoutWeights, f):
    """Class ids by softmax argmax; ties go to the lowest class index."""
    probs = softmax(logits(w, f))
    out = np.argmax(probs, axis=-1)
    return int(out[0]) if np.ndim(f) == 1 else out


def evaluate(w: ReadoutWeights, features, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty evaluation set")
    correct = int(np.count_nonzero(predict(w, features) == labels))
    return correct / labels.size


def confusion(w: ReadoutWeights, features, labels, n_classes: Optional[int] = None) -> np.ndarray:
    n_classes = n_classes or w.n_classes
    pred = predict(w, features)
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (np.asarray(labels), pred), 1)
    return out


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, w: ReadoutWeights, seed: int, cfg_hash: str):
    """Text header line (JSON) followed by the raw little-endian float64 matrix."""
    header = {"format": CHECKPOINT_MAGIC, "n_features": w.n_features,
              "n_classes": w.n_classes, "bias": w.bias, "seed": seed,
              "config_hash": cfg_hash}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(w.w.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a readout checkpoint")
        rows = header["n_features"] + (1 if header["bias"] else 0)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * header["n_classes"]:
        raise ValueError(f"{path}: truncated weight payload")
    return ReadoutWeights(data.reshape(rows, header["n_classes"]).copy(), header["bias"]), header
