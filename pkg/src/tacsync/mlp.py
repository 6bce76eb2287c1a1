"""Small fully-connected regressor trained from scratch.

Three tanh hidden layers with inverted dropout after each, identity
output, mean-squared-error loss, and mini-batch Adam. Everything runs in
float32 numpy with all randomness (init, shuffling, dropout masks) drawn
from one splitmix64 stream, so a fit is bit-reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, TrainingFailureError
from .rng import Rng


@dataclass(frozen=True)
class MlpHyperparameters:
    hidden: tuple = (64, 64, 64)
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 4096
    epochs: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_schedule: str = "constant"  # or "cosine" (anneals to 0 over training)

    def __post_init__(self):
        if len(self.hidden) != 3 or any(h < 1 for h in self.hidden):
            raise InvalidConfigError("exactly three positive hidden widths required")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise InvalidConfigError("dropout_rate must lie in [0, 1)")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise InvalidConfigError("learning_rate, batch_size, epochs must be positive")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidConfigError("lr_schedule must be constant or cosine")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def to_dict(self) -> dict:
        return {
            "hidden": list(self.hidden), "dropout_rate": self.dropout_rate,
            "learning_rate": self.learning_rate, "batch_size": self.batch_size,
            "epochs": self.epochs, "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2, "adam_eps": self.adam_eps,
            "lr_schedule": self.lr_schedule,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpHyperparameters":
        return cls(**{**d, "hidden": tuple(d["hidden"])})


@dataclass
class MlpRegressor:
    """Fitted network: weights/biases per layer plus input standardization."""

    weights: list  # (in, out) float32 per layer
    biases: list  # (out,) float32 per layer
    norm_mean: np.ndarray
    norm_std: np.ndarray
    hyperparameters: MlpHyperparameters
    seed: int
    final_train_loss: float

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Deterministic inference; dropout is disabled."""
        a = (np.asarray(x, np.float32) - self.norm_mean) / self.norm_std
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if i < last:
                a = np.tanh(a)
        return a


def fit_mlp_regressor(x: np.ndarray, y: np.ndarray,
                      hp: MlpHyperparameters = MlpHyperparameters(),
                      seed: int = 0) -> MlpRegressor:
    """Train on (n, d_in) -> (n, d_out) samples; deterministic given seed."""
    x = np.asarray(x, np.float32)
    y = np.asarray(y, np.float32)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InvalidConfigError("x and y must be 2-d with matching sample counts")
    n = x.shape[0]
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), np.float32(1e-6))
    xn = (x - mean) / std

    sizes = [x.shape[1], *hp.hidden, y.shape[1]]
    rng = Rng(seed)
    weights, biases = [], []
    for d_in, d_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        w = (rng.uniforms((d_in, d_out)) * 2.0 - 1.0) * bound
        weights.append(w.astype(np.float32))
        biases.append(np.zeros(d_out, np.float32))

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    b1, b2, eps = hp.adam_beta1, hp.adam_beta2, hp.adam_eps
    keep = 1.0 - hp.dropout_rate
    n_hidden = len(hp.hidden)
    batches_per_epoch = (n + hp.batch_size - 1) // hp.batch_size
    total_steps = hp.epochs * batches_per_epoch
    step = 0
    final_loss = np.inf

    for epoch in range(hp.epochs):
        order = rng.shuffled_indices(n)
        epoch_loss = 0.0
        for lo in range(0, n, hp.batch_size):
            idx = order[lo : lo + hp.batch_size]
            xb, yb = xn[idx], y[idx]

            layer_in = [xb]  # input consumed by each layer
            tanh_out = []
            masks = []
            a = xb
            for i in range(n_hidden):
                t = np.tanh(a @ weights[i] + biases[i])
                tanh_out.append(t)
                if hp.dropout_rate > 0.0:
                    mask = rng.bernoulli(keep, t.shape).astype(np.float32)
                    mask /= np.float32(keep)
                    a = t * mask
                else:
                    mask = None
                    a = t
                masks.append(mask)
                layer_in.append(a)
            out = a @ weights[-1] + biases[-1]

            err = out - yb
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise TrainingFailureError(
                    f"loss diverged to {loss} at epoch {epoch}", epoch=epoch
                )
            epoch_loss += loss * len(idx)

            # backward: dL/dout for the mean over batch*dims
            grad = (2.0 / err.size) * err
            grads_w = [None] * len(weights)
            grads_b = [None] * len(weights)
            grads_w[-1] = layer_in[-1].T @ grad
            grads_b[-1] = grad.sum(axis=0)
            upstream = grad @ weights[-1].T
            for i in range(n_hidden - 1, -1, -1):
                if masks[i] is not None:
                    upstream = upstream * masks[i]
                upstream = upstream * (1.0 - tanh_out[i] * tanh_out[i])
                grads_w[i] = layer_in[i].T @ upstream
                grads_b[i] = upstream.sum(axis=0)
                if i > 0:
                    upstream = upstream @ weights[i].T

            step += 1
            if hp.lr_schedule == "cosine":
                lr = hp.learning_rate * 0.5 * (1.0 + np.cos(np.pi * (step - 1) / total_steps))
            else:
                lr = hp.learning_rate
            corr1 = 1.0 - b1**step
            corr2 = 1.0 - b2**step
            for i in range(len(weights)):
                for p, g, m, v in ((weights[i], grads_w[i], m_w[i], v_w[i]),
                                   (biases[i], grads_b[i], m_b[i], v_b[i])):
                    m *= b1
                    m += (1.0 - b1) * g
                    v *= b2
                    v += (1.0 - b2) * (g * g)
                    p -= lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
        final_loss = epoch_loss / n

    return MlpRegressor(weights=weights, biases=biases, norm_mean=mean,
                        norm_std=std, hyperparameters=hp, seed=seed,
                        final_train_loss=final_loss)
