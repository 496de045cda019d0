"""Minimal reverse-mode autodiff over dense float64 arrays.

Only the operations needed by the controller architectures are provided:
affine layers, ReLU/tanh, row-wise softmax, inverted dropout, elementwise
product, column slicing and the mean-squared-error reduction. Values and
gradients are plain numpy arrays; the graph is a tape of parent links with
per-node backward closures.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A node in the computation graph: value, gradient buffer, parents."""

    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable gradient buffer."""
        if self.value.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


def _toposort(root):
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


class ParamSet:
    """Ordered, named collection of parameter tensors with gradient buffers."""

    def __init__(self):
        self._by_name: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._by_name:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(value)
        self._by_name[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._by_name[name]

    def __contains__(self, name):
        return name in self._by_name

    def __len__(self):
        return len(self._by_name)

    def items(self):
        return self._by_name.items()

    def names(self):
        return list(self._by_name)

    def zero_grad(self):
        for t in self._by_name.values():
            t.zero_grad()

    @property
    def n_params(self) -> int:
        return sum(t.value.size for t in self._by_name.values())


# ---------------------------------------------------------------------------
# operations


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w.T + b with x (batch, in), w (out, in), b (out,)."""
    if x.value.ndim != 2 or w.value.ndim != 2:
        raise ValueError(f"affine expects 2-D x and w, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ValueError(
            f"affine shape mismatch: x {x.shape}, w {w.shape}, b {b.shape}"
        )
    out = Tensor(x.value @ w.value.T + b.value, (x, w, b))

    def bk():
        x.grad += out.grad @ w.value
        w.grad += out.grad.T @ x.value
        b.grad += out.grad.sum(axis=0)

    out._backward = bk
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.value, 0.0), (x,))

    def bk():
        x.grad += out.grad * (x.value > 0.0)

    out._backward = bk
    return out


def tanh(x: Tensor) -> Tensor:
    out = Tensor(np.tanh(x.value), (x,))

    def bk():
        x.grad += out.grad * (1.0 - out.value**2)

    out._backward = bk
    return out


def softmax(x: Tensor) -> Tensor:
    """Row-wise softmax, stabilized by max subtraction."""
    if not np.all(np.isfinite(x.value)):
        raise ValueError("softmax input must be finite")
    z = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y, (x,))

    def bk():
        g = out.grad
        x.grad += y * (g - (g * y).sum(axis=-1, keepdims=True))

    out._backward = bk
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-p); identity in eval mode."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    out = Tensor(x.value * mask, (x,))

    def bk():
        x.grad += out.grad * mask

    out._backward = bk
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    out = Tensor(a.value * b.value, (a, b))

    def bk():
        a.grad += out.grad * b.value
        b.grad += out.grad * a.value

    out._backward = bk
    return out


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    out = Tensor(x.value[:, start:stop], (x,))

    def bk():
        x.grad[:, start:stop] += out.grad

    out._backward = bk
    return out


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    """(1/T) * sum_i ||pred_i - target_i||^2 over a (T, d) batch."""
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    n = pred.shape[0]
    if n == 0:
        raise ValueError("mse of an empty batch")
    diff = pred.value - target
    out = Tensor(np.sum(diff**2) / n, (pred,))

    def bk():
        pred.grad += (2.0 / n) * diff * out.grad

    out._backward = bk
    return out
