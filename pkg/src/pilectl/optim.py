"""Kaiming initialization, the rectified-Adam optimizer and the
finite-difference gradient oracle used to test reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .autodiff import ParamSet


def kaiming_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Normal(0, sqrt(2/fan_in)) weights, fan_in = cols (ReLU gain)."""
    if rows < 1 or cols < 1:
        raise ValueError(f"invalid matrix shape ({rows}, {cols})")
    return rng.normal(0.0, np.sqrt(2.0 / cols), size=(rows, cols))


class RAdam:
    """Rectified Adam.

    The bias-corrected first moment is always applied; the adaptive
    second-moment denominator is only used once the rectification quantity
    rho_t exceeds 4, scaled by the variance-rectification factor r_t.
    Before that the update is the plain momentum step.
    """

    def __init__(self, params: ParamSet, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0.0:
            raise ValueError(f"lr must be non-negative, got {lr}")
        if len(params) == 0:
            raise ValueError("optimizer needs at least one parameter tensor")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(t.value) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.value) for name, t in params.items()}
        self.rho_inf = 2.0 / (1.0 - beta2) - 1.0

    def step(self, lr: float | None = None):
        lr = self.lr if lr is None else lr
        self.t += 1
        t = self.t
        b1, b2 = self.beta1, self.beta2
        rho_t = self.rho_inf - 2.0 * t * b2**t / (1.0 - b2**t)
        if rho_t > 4.0:
            r_t = np.sqrt(
                ((rho_t - 4.0) * (rho_t - 2.0) * self.rho_inf)
                / ((self.rho_inf - 4.0) * (self.rho_inf - 2.0) * rho_t)
            )
        else:
            r_t = None
        for name, p in self.params.items():
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m[...] = b1 * m + (1.0 - b1) * g
            v[...] = b2 * v + (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1**t)
            if r_t is not None:
                v_hat = np.sqrt(v / (1.0 - b2**t))
                p.value -= lr * r_t * m_hat / (v_hat + self.eps)
            else:
                p.value -= lr * m_hat


def finite_diff_grad(loss_fn, params: ParamSet, h: float = 1e-6) -> dict[str, np.ndarray]:
    """Central-difference gradient of loss_fn() w.r.t. every parameter scalar.

    loss_fn reads the current parameter values and returns a float; the
    parameters are restored exactly after each probe.
    """
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lo_hi = loss_fn()
            flat[i] = orig - h
            lo_lo = loss_fn()
            flat[i] = orig
            gflat[i] = (lo_hi - lo_lo) / (2.0 * h)
        grads[name] = g
    return grads


def max_relative_grad_error(analytic: dict[str, np.ndarray],
                            numeric: dict[str, np.ndarray],
                            floor: float = 1e-4) -> float:
    """Worst-case |a - n| / max(|a|, |n|, floor) over all parameters."""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
