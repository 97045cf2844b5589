"""Binary domain classifier trained from scratch with numpy.

A small leaky-ReLU MLP ending in a sigmoid maps a scene vector to a
domainness score in (0, 1): '0' means source-like, '1' target-like. Training
is plain seeded mini-batch gradient descent on binary cross-entropy with an
L2 penalty, so every run is exactly reproducible and the gradients can be
checked against finite differences.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import FrameRecord, Score
from .scoring import scene_vector

PRED_EPS = 1e-7
CHECKPOINT_VERSION = 1


class NumericalError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 300
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


class DiscriminatorModel:
    """Leaky-ReLU MLP with a sigmoid head; immutable once built."""

    def __init__(self, layer_dims, weights, biases, leak=0.01, rng_seed=0):
        if len(layer_dims) < 3:
            raise ValueError("need at least one hidden layer")
        if layer_dims[-1] != 1:
            raise ValueError("output dimension must be 1")
        if not 0.0 < leak < 1.0:
            raise ValueError("leak must lie in (0,1)")
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.leak = float(leak)
        self.rng_seed = int(rng_seed)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[i], self.layer_dims[i + 1]):
                raise ValueError("weight shape mismatch at layer %d" % i)
            if b.shape != (self.layer_dims[i + 1],):
                raise ValueError("bias shape mismatch at layer %d" % i)

    @classmethod
    def initialize(cls, layer_dims, seed=0, leak=0.01):
        """Glorot-uniform init, deterministic per seed."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(layer_dims, weights, biases, leak=leak, rng_seed=seed)

    @classmethod
    def zeros(cls, layer_dims, leak=0.01):
        weights = [
            np.zeros((a, b)) for a, b in zip(layer_dims[:-1], layer_dims[1:])
        ]
        biases = [np.zeros(b) for b in layer_dims[1:]]
        return cls(layer_dims, weights, biases, leak=leak)

    def copy(self):
        return DiscriminatorModel(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            leak=self.leak,
            rng_seed=self.rng_seed,
        )

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.layer_dims[0]:
            raise ValueError(
                "input dimension %d != expected %d" % (X.shape[1], self.layer_dims[0])
            )
        return X

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        a = X
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            a = np.where(z > 0, z, self.leak * z)
        return (a @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        p = _sigmoid(self.logits(X))
        return np.clip(p, PRED_EPS, 1.0 - PRED_EPS)

    def save(self, path):
        payload = {
            "version": CHECKPOINT_VERSION,
            "layer_dims": list(self.layer_dims),
            "leak": self.leak,
            "rng_seed": self.rng_seed,
            "weights": [_encode(w) for w in self.weights],
            "biases": [_encode(b) for b in self.biases],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError("unsupported checkpoint version")
        dims = payload["layer_dims"]
        weights = [
            _decode(blob, (dims[i], dims[i + 1]))
            for i, blob in enumerate(payload["weights"])
        ]
        biases = [
            _decode(blob, (dims[i + 1],)) for i, blob in enumerate(payload["biases"])
        ]
        return cls(
            dims, weights, biases, leak=payload["leak"], rng_seed=payload["rng_seed"]
        )


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode(
        "ascii"
    )


def _decode(blob: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(blob), dtype="<f8").reshape(shape).copy()


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: DiscriminatorModel, v: np.ndarray) -> float:
    """Domainness probability for a single scene vector, clamped away from 0/1."""
    return float(model.predict(np.asarray(v)[None, :])[0])


def bce_loss(preds: Sequence[float], labels: Sequence[int]) -> float:
    """Mean binary cross-entropy; label 0 = source, 1 = target."""
    p = np.asarray(preds, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("preds and labels must be equal-length and non-empty")
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


def loss_and_grads(
    model: DiscriminatorModel, X: np.ndarray, y: np.ndarray, l2: float = 0.0
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """BCE + L2 loss and its analytic gradients by backprop.

    Gradient through the prediction clamp is zero where the clamp is active,
    matching what finite differences see.
    """
    X = model._check_input(X)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]

    activations = [X]
    pre = []
    a = X
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.where(z > 0, z, model.leak * z)
        activations.append(a)
    z_out = (a @ model.weights[-1] + model.biases[-1])[:, 0]
    p_raw = _sigmoid(z_out)
    p = np.clip(p_raw, PRED_EPS, 1.0 - PRED_EPS)

    loss = bce_loss(p, y)
    if l2:
        loss += 0.5 * l2 * sum(float(np.sum(w * w)) for w in model.weights)

    clamped = (p_raw < PRED_EPS) | (p_raw > 1.0 - PRED_EPS)
    delta = np.where(clamped, 0.0, p - y)[:, None] / n

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    grads_w[-1] = activations[-1].T @ delta + l2 * model.weights[-1]
    grads_b[-1] = delta.sum(axis=0)
    back = delta @ model.weights[-1].T
    for i in range(len(model.weights) - 2, -1, -1):
        back = back * np.where(pre[i] > 0, 1.0, model.leak)
        grads_w[i] = activations[i].T @ back + l2 * model.weights[i]
        grads_b[i] = back.sum(axis=0)
        if i > 0:
            back = back @ model.weights[i].T
    return loss, grads_w, grads_b


def train(
    model: DiscriminatorModel,
    source_vs: Sequence[np.ndarray],
    target_vs: Sequence[np.ndarray],
    cfg: TrainConfig,
) -> Tuple[DiscriminatorModel, List[float]]:
    """Seeded mini-batch gradient descent; returns a new model and per-epoch loss."""
    if len(source_vs) == 0 or len(target_vs) == 0:
        raise ValueError("both domains must contribute at least one vector")
    X = np.vstack([np.asarray(v, dtype=np.float64) for v in list(source_vs) + list(target_vs)])
    y = np.concatenate(
        [np.zeros(len(source_vs)), np.ones(len(target_vs))]
    )
    model = model.copy()
    if cfg.epochs == 0:
        return model, []

    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, gw, gb = loss_and_grads(model, X[idx], y[idx], l2=cfg.l2)
            for w, g in zip(model.weights, gw):
                w -= cfg.learning_rate * g
            for b, g in zip(model.biases, gb):
                b -= cfg.learning_rate * g
        epoch_loss = bce_loss(model.predict(X), y)
        if not np.isfinite(epoch_loss):
            raise NumericalError(
                "non-finite loss after epoch %d (lr=%g)" % (len(history) + 1, cfg.learning_rate)
            )
        history.append(epoch_loss)
    return model, history


def domainness(model: DiscriminatorModel, frame: FrameRecord) -> Score:
    """Score one frame: sigmoid output of the MLP on its pooled enhanced map."""
    return Score(frame_id=frame.id, value=forward(model, scene_vector(frame)))


def domainness_logit(model: DiscriminatorModel, frame: FrameRecord) -> Score:
    """Same ranking as domainness, expressed as a raw logit."""
    return Score(
        frame_id=frame.id,
        value=float(model.logits(scene_vector(frame)[None, :])[0]),
    )
