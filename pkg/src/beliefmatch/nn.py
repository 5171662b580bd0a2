"""Minimal feedforward classifier with manual backpropagation.

The network is a plain MLP (affine layers with ReLU between them, identity at
the output) stored as float64 numpy arrays, so analytic gradients can be
checked against central finite differences at 1e-6-level tolerances.

Training follows a fixed recipe: seeded shuffling, minibatch gradients of the
configured loss, global-norm gradient clipping, and a learning-rate warm-up
over the first five epochs ([0.1, 0.2, 0.4, 0.6, 0.8] of the base rate)
followed by step decay at optional milestones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bmloss import LossConfig, bm_batch, softmax_ce_batch

CHECKPOINT_FORMAT = "beliefmatch-mlp"
CHECKPOINT_VERSION = 1

_WARMUP_FACTORS = (0.1, 0.2, 0.4, 0.6, 0.8)


class TrainingDivergedError(RuntimeError):
    """Raised when a loss or gradient stops being finite during training."""


def he_init(fan_in: int, fan_out: int, rng: np.random.Generator):
    """One layer: weights ~ Normal(0, 2 / fan_in), biases zero.

    Returns (W, b) with W of shape (fan_out, fan_in).
    """
    if fan_in < 1 or fan_out < 1:
        raise ValueError("layer dimensions must be >= 1")
    w = rng.standard_normal((fan_out, fan_in)) * math.sqrt(2.0 / fan_in)
    return w, np.zeros(fan_out)


class MLP:
    """Feedforward net; forward caches activations for a following backward."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching, non-empty weight/bias lists")
        for i in range(1, len(weights)):
            if weights[i].shape[1] != weights[i - 1].shape[0]:
                raise ValueError("consecutive layer dimensions must chain")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self._cache = None

    @classmethod
    def init(cls, dims, rng: np.random.Generator) -> "MLP":
        """He-initialized network for layer sizes dims = [in, h1, ..., K]."""
        if len(dims) < 2:
            raise ValueError("need at least input and output dimensions")
        ws, bs = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            w, b = he_init(fan_in, fan_out, rng)
            ws.append(w)
            bs.append(b)
        return cls(ws, bs)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (live references)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for a batch (n, d_in) -> (n, K); caches for backward."""
        a = np.asarray(x, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != self.weights[0].shape[1]:
            raise ValueError(
                f"input shape {a.shape} incompatible with fan_in {self.weights[0].shape[1]}"
            )
        activations = [a]
        preacts = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = activations[-1] @ w.T + b
            preacts.append(z)
            a = z if i == len(self.weights) - 1 else np.maximum(z, 0.0)
            activations.append(a)
        self._cache = (activations, preacts)
        return activations[-1]

    def backward(self, grad_logits: np.ndarray):
        """Exact gradients of a scalar with the given logit gradient.

        Returns (param_grads, input_grad) where param_grads lines up with
        params(). Uses the cache of the most recent forward.
        """
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        activations, preacts = self._cache
        g = np.asarray(grad_logits, dtype=np.float64)
        if g.shape != activations[-1].shape:
            raise ValueError(f"grad shape {g.shape} != logits shape {activations[-1].shape}")
        param_grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        for i in reversed(range(len(self.weights))):
            if i != len(self.weights) - 1:
                g = g * (preacts[i] > 0.0)
            param_grads[2 * i] = g.T @ activations[i]
            param_grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i]
        return param_grads, g


def clip_grad_norm(grads: list[np.ndarray], max_norm: float = 1.0) -> list[np.ndarray]:
    """Scale the whole gradient so its global L2 norm is at most max_norm."""
    sq = 0.0
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError("non-finite gradient")
        sq += float((g * g).sum())
    norm = math.sqrt(sq)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return [g * scale for g in grads]


def lr_schedule(epoch: int, base_lr: float, warmup_epochs: int = 5, milestones=()) -> float:
    """Warm-up ramp, then base rate with x0.1 step decay at each milestone."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if epoch < warmup_epochs:
        idx = (epoch * len(_WARMUP_FACTORS)) // warmup_epochs
        return _WARMUP_FACTORS[idx] * base_lr
    decay = sum(1 for m in milestones if epoch >= m)
    return base_lr * (0.1**decay)


class SgdMomentum:
    """Heavy-ball SGD: v <- mu v + g; p <- p - lr v."""

    def __init__(self, momentum: float = 0.9):
        self.momentum = momentum
        self._velocity = None

    def step(self, model: MLP, grads: list[np.ndarray], lr: float) -> None:
        params = model.params()
        if self._velocity is None:
            self._velocity = [np.zeros_like(p) for p in params]
        for p, v, g in zip(params, self._velocity, grads):
            v *= self.momentum
            v += g
            p -= lr * v


class Adam:
    """Adam with bias correction: default decays 0.9 / 0.999, eps 1e-8."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self._m = None
        self._v = None
        self._t = 0

    def step(self, model: MLP, grads: list[np.ndarray], lr: float) -> None:
        params = model.params()
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        c1 = 1.0 - self.beta1**self._t
        c2 = 1.0 - self.beta2**self._t
        for p, m, v, g in zip(params, self._m, self._v, grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    """Training recipe knobs; defaults follow the standard recipe above."""

    epochs: int = 60
    batch_size: int = 64
    base_lr: float = 0.1
    warmup_epochs: int = 5
    clip_norm: float = 1.0
    optimizer: str = "sgd-momentum"
    seed: int = 0
    loss: str = "softmax-ce"
    loss_cfg: LossConfig = field(default_factory=LossConfig)
    milestones: tuple = ()

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.base_lr <= 0 or self.clip_norm <= 0:
            raise ValueError("base_lr and clip_norm must be positive")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")
        if self.optimizer not in ("sgd-momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in ("softmax-ce", "bm"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_error: float
    val_loss: float
    val_error: float


def make_loss(cfg: TrainConfig):
    """Batch loss closure (logits, labels) -> (mean loss, logit gradient)."""
    if cfg.loss == "softmax-ce":
        return softmax_ce_batch
    return lambda logits, ys: bm_batch(logits, ys, cfg.loss_cfg)


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd-momentum":
        return SgdMomentum()
    return Adam()


def error_rate(model: MLP, inputs: np.ndarray, labels: np.ndarray) -> float:
    preds = model.forward(inputs).argmax(axis=1)
    return float((preds != labels).mean())


def train(model: MLP, train_data, cfg: TrainConfig, val_data=None) -> list[EpochRecord]:
    """Minibatch-train the model in place; returns the per-epoch log.

    Fully deterministic for a fixed seed: one shuffle permutation per epoch
    from the seeded stream, batches visited in order, last partial batch
    kept. Raises TrainingDivergedError as soon as the loss or any gradient
    stops being finite.
    """
    rng = np.random.default_rng(cfg.seed)
    loss_fn = make_loss(cfg)
    opt = make_optimizer(cfg)
    n = len(train_data)
    records = []
    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg.base_lr, cfg.warmup_epochs, cfg.milestones)
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            logits = model.forward(train_data.inputs[idx])
            loss, grad_logits = loss_fn(logits, train_data.labels[idx])
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss!r} at epoch {epoch}, batch start {start}"
                )
            grads, _ = model.backward(grad_logits)
            grads = clip_grad_norm(grads, cfg.clip_norm)
            opt.step(model, grads, lr)
            loss_sum += loss * len(idx)
        train_error = error_rate(model, train_data.inputs, train_data.labels)
        if val_data is not None:
            val_logits = model.forward(val_data.inputs)
            val_loss, _ = loss_fn(val_logits, val_data.labels)
            val_error = float((val_logits.argmax(axis=1) != val_data.labels).mean())
        else:
            val_loss, val_error = math.nan, math.nan
        records.append(
            EpochRecord(epoch, lr, loss_sum / n, train_error, val_loss, val_error)
        )
    return records


def save_checkpoint(model: MLP, path, extra: dict | None = None) -> None:
    """Write the model as versioned JSON (row-major weight matrices)."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": model.dims,
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
        "extra": extra or {},
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint; returns (model, extra)."""
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    weights = [np.asarray(layer["weights"], dtype=np.float64) for layer in doc["layers"]]
    biases = [np.asarray(layer["bias"], dtype=np.float64) for layer in doc["layers"]]
    model = MLP(weights, biases)
    if model.dims != doc["dims"]:
        raise ValueError(f"{path}: dims field does not match stored arrays")
    return model, doc.get("extra", {})
