"""Plain-numpy forward operations (no tape) used on the inference path."""

from __future__ import annotations

import numpy as np


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """y_i = sum_j w[i, j] x[j] + b[i]."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if x.shape[-1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ValueError(
            f"linear_forward shape mismatch: x {x.shape}, w {w.shape}, b {b.shape}"
        )
    return x @ w.T + b


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def tanh_op(x):
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax(f):
    """Stable row-wise softmax: subtract the max before exponentiation."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] < 1:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(f)):
        raise ValueError("softmax input must be finite")
    z = f - f.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout(x, p: float, mode: str, rng: np.random.Generator | None = None):
    """Inverted dropout. mode is 'train' or 'eval'; eval is the identity."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown dropout mode {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if mode == "eval" or p == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask


def mse_loss(pred, target) -> float:
    """(1/T) * sum_i ||pred_i - target_i||^2."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise ValueError(f"mse_loss shape mismatch: {pred.shape} vs {target.shape}")
    if pred.shape[0] == 0:
        raise ValueError("mse_loss of an empty batch")
    return float(np.sum((pred - target) ** 2) / pred.shape[0])
