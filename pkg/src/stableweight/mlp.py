"""Minimal dense feed-forward networks with backpropagation on numpy.

Used in three roles: the binary classifier behind density-ratio weighting,
the random nonlinear outcome generator for synthetic data, and the weighted
nonlinear regressor. Scalar output only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

ACTIVATIONS = ("relu", "tanh")
OUTPUT_HEADS = ("linear", "sigmoid")


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    output_head: str = "linear"

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    def copy(self) -> "MlpModel":
        return replace(
            self,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 100
    batch_size: int = 128
    weight_decay: float = 0.0
    early_stop_patience: int = 0  # 0 trains for max_epochs on all data
    optimizer: str = "sgd"  # "sgd" | "adam"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def mlp_init(
    layer_sizes,
    activation: str = "relu",
    output_head: str = "linear",
    rng: np.random.Generator | None = None,
) -> MlpModel:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer size")
    if sizes[-1] != 1:
        raise ValueError("output layer must have size 1 (scalar output)")
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}")
    if output_head not in OUTPUT_HEADS:
        raise ValueError(f"output_head must be one of {OUTPUT_HEADS}")
    if rng is None:
        raise ValueError("an explicit rng is required")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, activation, output_head)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(float)
    t = np.tanh(z)
    return 1.0 - t * t


def _forward_trace(model: MlpModel, x: np.ndarray):
    """Forward pass keeping pre-activations; returns (logits, zs, activations)."""
    acts = [x]
    zs = []
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        zs.append(z)
        h = z if i == last else _activate(z, model.activation)
        acts.append(h)
    return zs[-1][:, 0], zs, acts


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Network output for each row of x; sigmoid head maps into (0, 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise ValueError(
            f"input has shape {x.shape}, expected (n, {model.n_inputs})"
        )
    logits, _, _ = _forward_trace(model, x)
    if model.output_head == "sigmoid":
        return sigmoid(logits)
    return logits


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_loss(
    model: MlpModel,
    x: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray | None = None,
    loss: str = "weighted_mse",
) -> float:
    """Mean weighted loss over the batch; weights are mean-normalized first."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = _norm_weights(sample_weights, len(y))
    logits, _, _ = _forward_trace(model, x)
    if loss == "weighted_mse":
        pred = sigmoid(logits) if model.output_head == "sigmoid" else logits
        return float(np.mean(w * (pred - y) ** 2))
    if loss == "weighted_bce":
        if model.output_head != "sigmoid":
            raise ValueError("weighted_bce requires a sigmoid output head")
        # stable: -[y log p + (1-y) log(1-p)] = logaddexp(0, z) - y*z
        per = np.logaddexp(0.0, logits) - y * logits
        return float(np.mean(w * per))
    raise ValueError(f"unknown loss {loss!r}")


def _norm_weights(sample_weights, n: int) -> np.ndarray:
    if sample_weights is None:
        return np.ones(n)
    w = np.asarray(getattr(sample_weights, "w", sample_weights), dtype=float)
    if w.shape != (n,):
        raise ValueError(f"sample_weights has shape {w.shape}, expected ({n},)")
    if np.any(w < 0):
        raise ValueError("sample weights must be nonnegative")
    mean = w.mean()
    if mean <= 0:
        raise ValueError("sample weights must not be all zero")
    return w / mean


def mlp_gradients(
    model: MlpModel,
    x: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray | None = None,
    loss: str = "weighted_mse",
):
    """Analytic full-batch gradients of mlp_loss w.r.t. weights and biases."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(targets, dtype=float)
    n = len(y)
    w = _norm_weights(sample_weights, n)
    logits, zs, acts = _forward_trace(model, x)

    if loss == "weighted_mse":
        pred = sigmoid(logits) if model.output_head == "sigmoid" else logits
        dloss_dpred = 2.0 * w * (pred - y) / n
        if model.output_head == "sigmoid":
            delta = dloss_dpred * pred * (1.0 - pred)
        else:
            delta = dloss_dpred
    elif loss == "weighted_bce":
        if model.output_head != "sigmoid":
            raise ValueError("weighted_bce requires a sigmoid output head")
        delta = w * (sigmoid(logits) - y) / n
    else:
        raise ValueError(f"unknown loss {loss!r}")

    grads_w = [np.empty(0)] * len(model.weights)
    grads_b = [np.empty(0)] * len(model.biases)
    d = delta[:, None]
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ d
        grads_b[i] = d.sum(axis=0)
        if i > 0:
            d = (d @ model.weights[i].T) * _activate_grad(zs[i - 1], model.activation)
    return grads_w, grads_b


def mlp_train(
    model: MlpModel,
    x: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray | None = None,
    loss: str = "weighted_mse",
    cfg: TrainConfig | None = None,
    rng: np.random.Generator | None = None,
) -> MlpModel:
    """Mini-batch gradient descent on the weighted loss; returns a trained copy.

    With ``early_stop_patience > 0`` a 20% validation split is held out and
    the parameters with the best validation loss are restored. Raises on a
    non-finite loss, reporting the epoch where it occurred.
    """
    if cfg is None:
        cfg = TrainConfig()
    if rng is None:
        raise ValueError("an explicit rng is required")
    x = np.asarray(x, dtype=float)
    y = np.asarray(targets, dtype=float)
    n = len(y)
    w_all = _norm_weights(sample_weights, n)
    model = model.copy()

    if cfg.early_stop_patience > 0 and n >= 10:
        order = rng.permutation(n)
        n_val = max(1, n // 5)
        val_idx, tr_idx = order[:n_val], order[n_val:]
    else:
        tr_idx = np.arange(n)
        val_idx = None

    x_tr, y_tr, w_tr = x[tr_idx], y[tr_idx], w_all[tr_idx]
    n_tr = len(tr_idx)

    adam_m = adam_v = None
    if cfg.optimizer == "adam":
        adam_m = [np.zeros_like(p) for p in model.weights + model.biases]
        adam_v = [np.zeros_like(p) for p in model.weights + model.biases]
    adam_t = 0

    best_val = np.inf
    best_params = None
    stale = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            gw, gb = mlp_gradients(model, x_tr[idx], y_tr[idx], w_tr[idx], loss)
            if cfg.weight_decay > 0:
                gw = [g + cfg.weight_decay * p for g, p in zip(gw, model.weights)]
            params = model.weights + model.biases
            grads = gw + gb
            if cfg.optimizer == "adam":
                adam_t += 1
                b1, b2, eps = 0.9, 0.999, 1e-8
                for j, (p, g) in enumerate(zip(params, grads)):
                    adam_m[j] = b1 * adam_m[j] + (1 - b1) * g
                    adam_v[j] = b2 * adam_v[j] + (1 - b2) * g * g
                    mhat = adam_m[j] / (1 - b1 ** adam_t)
                    vhat = adam_v[j] / (1 - b2 ** adam_t)
                    p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
            else:
                for p, g in zip(params, grads):
                    p -= cfg.learning_rate * g

        epoch_loss = mlp_loss(model, x_tr, y_tr, w_tr, loss)
        if not np.isfinite(epoch_loss):
            raise RuntimeError(f"training loss became non-finite at epoch {epoch}")
        if val_idx is not None:
            val_loss = mlp_loss(model, x[val_idx], y[val_idx], w_all[val_idx], loss)
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best_params = (
                    [p.copy() for p in model.weights],
                    [p.copy() for p in model.biases],
                )
                stale = 0
            else:
                stale += 1
                if stale >= cfg.early_stop_patience:
                    break

    if best_params is not None:
        model.weights, model.biases = best_params
    return model


def save_mlp(model: MlpModel, path) -> None:
    doc = {
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "output_head": model.output_head,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_mlp(path) -> MlpModel:
    with open(path) as fh:
        doc = json.load(fh)
    return MlpModel(
        layer_sizes=tuple(doc["layer_sizes"]),
        weights=[np.asarray(w, dtype=float) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=float) for b in doc["biases"]],
        activation=doc["activation"],
        output_head=doc["output_head"],
    )
