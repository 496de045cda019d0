"""The four bucket-filling controller architectures.

All controllers map machine sensor readings to a three-component control
vector (boom, bucket, throttle) bounded by a final tanh. The attention
variants additionally compute softmax masks over the inputs (ANNet) and over
both inputs and pre-activation outputs (DANNet).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import ParamSet, Tensor
from .optim import kaiming_init

NNET = "nnet"
NNETV2 = "nnetv2"
ANNET = "annet"
DANNET = "dannet"
KINDS = (NNET, NNETV2, ANNET, DANNET)

# Extended sensor channel order used by datasets and the simulator.
CHANNELS = ("theta1", "theta2", "p_d", "p_t", "p_l", "p_b", "a")
N_CONTROLS = 3

F_HIDDEN = (200, 200, 10)
A_HIDDEN = (64, 64)
NNET_HIDDEN = 5
DROPOUT_P = 0.35


@dataclass(frozen=True)
class ControllerSpec:
    """Architecture descriptor: kind, sensor dimensionality, attention input."""

    kind: str
    input_dim: int = 4
    attention_input_dim: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.input_dim not in (3, 4, 6, 7):
            raise ValueError(f"input_dim must be 3 or 4 (6/7 with concatenated "
                             f"extra sensors), got {self.input_dim}")
        if self.input_dim in (6, 7) and self.kind != NNETV2:
            raise ValueError(
                f"concatenated extra sensors are only supported for {NNETV2}")
        if self.kind in (NNET, NNETV2):
            if self.attention_input_dim is not None:
                raise ValueError(f"{self.kind} has no attention module")
        else:
            att = self.attention_input_dim
            if att is None:
                object.__setattr__(self, "attention_input_dim", self.input_dim)
            elif att not in (self.input_dim, self.input_dim + 3):
                raise ValueError(
                    f"attention_input_dim must be {self.input_dim} or "
                    f"{self.input_dim + 3}, got {att}")

    @property
    def uses_pt(self) -> bool:
        return self.input_dim in (4, 7)

    @property
    def mask_dim(self) -> int | None:
        if self.kind == ANNET:
            return self.input_dim
        if self.kind == DANNET:
            return self.input_dim + N_CONTROLS
        return None

    def input_columns(self) -> list[int]:
        """Indices into the 7-channel extended sensor vector fed to F."""
        base = [0, 1, 2] if self.input_dim in (3, 6) else [0, 1, 2, 3]
        if self.input_dim in (6, 7):  # NNetV2 with concatenated extras
            base = base + [4, 5, 6]
        return base

    def attention_columns(self) -> list[int] | None:
        if self.attention_input_dim is None:
            return None
        cols = self.input_columns()
        if self.attention_input_dim == self.input_dim + 3:
            cols = cols + [4, 5, 6]
        return cols


@dataclass
class ControllerParams:
    """Parameters of one controller plus its input-normalization statistics."""

    spec: ControllerSpec
    theta: ParamSet
    psi: ParamSet | None = None
    norm_mean: np.ndarray = field(default_factory=lambda: np.zeros(len(CHANNELS)))
    norm_std: np.ndarray = field(default_factory=lambda: np.ones(len(CHANNELS)))
    normalized: bool = True

    @property
    def n_params(self) -> int:
        n = self.theta.n_params
        if self.psi is not None:
            n += self.psi.n_params
        return n

    def all_tensors(self):
        for name, t in self.theta.items():
            yield f"theta.{name}", t
        if self.psi is not None:
            for name, t in self.psi.items():
                yield f"psi.{name}", t


def _add_dense_stack(ps: ParamSet, dims: list[int], rng: np.random.Generator):
    for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:]), start=1):
        ps.add(f"w{i}", kaiming_init(n_out, n_in, rng))
        ps.add(f"b{i}", np.zeros(n_out))


def build_controller(spec: ControllerSpec, rng: np.random.Generator) -> ControllerParams:
    """Kaiming-initialized weights, zero biases, deterministic given rng."""
    theta = ParamSet()
    if spec.kind == NNET:
        _add_dense_stack(theta, [spec.input_dim, NNET_HIDDEN, N_CONTROLS], rng)
    else:
        _add_dense_stack(theta, [spec.input_dim, *F_HIDDEN, N_CONTROLS], rng)
    psi = None
    if spec.kind in (ANNET, DANNET):
        psi = ParamSet()
        _add_dense_stack(psi, [spec.attention_input_dim, *A_HIDDEN, spec.mask_dim], rng)
    return ControllerParams(spec=spec, theta=theta, psi=psi)


# ---------------------------------------------------------------------------
# forward passes


def _normalize(params: ControllerParams, obs: np.ndarray) -> np.ndarray:
    if not params.normalized:
        return obs
    return (obs - params.norm_mean) / params.norm_std


def _mlp(ps: ParamSet, x: Tensor, *, n_hidden: int, drop_after: tuple[int, ...],
         train: bool, dropout_p: float, rng) -> Tensor:
    """Hidden layers with ReLU (+ dropout where listed), final layer linear."""
    h = x
    for i in range(1, n_hidden + 1):
        h = ad.relu(ad.affine(h, ps[f"w{i}"], ps[f"b{i}"]))
        if i in drop_after:
            h = ad.dropout(h, dropout_p, rng, train)
    return ad.affine(h, ps[f"w{n_hidden + 1}"], ps[f"b{n_hidden + 1}"])


def _f_preactivation(params: ControllerParams, x: Tensor, *, train, dropout_p, rng) -> Tensor:
    """Controller network F up to (not including) the output tanh."""
    if params.spec.kind == NNET:
        h = ad.tanh(ad.affine(x, params.theta["w1"], params.theta["b1"]))
        return ad.affine(h, params.theta["w2"], params.theta["b2"])
    return _mlp(params.theta, x, n_hidden=len(F_HIDDEN), drop_after=(1, 2),
                train=train, dropout_p=dropout_p, rng=rng)


def forward_graph(params: ControllerParams, obs: np.ndarray, *, train: bool = False,
                  dropout_p: float = DROPOUT_P, rng: np.random.Generator | None = None):
    """Run a controller on a (batch, 7) extended-sensor array.

    Returns (u, m, m_u) as graph tensors; m and m_u are None where the
    architecture has no such mask.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    if obs.shape[1] != len(CHANNELS):
        raise ValueError(
            f"expected {len(CHANNELS)}-channel observations, got {obs.shape}")
    spec = params.spec
    normed = _normalize(params, obs)
    s = Tensor(normed[:, spec.input_columns()])

    if spec.kind in (NNET, NNETV2):
        return ad.tanh(_f_preactivation(params, s, train=train,
                                        dropout_p=dropout_p, rng=rng)), None, None

    s_att = Tensor(normed[:, spec.attention_columns()])
    feats = _mlp(params.psi, s_att, n_hidden=len(A_HIDDEN), drop_after=(1, 2),
                 train=train, dropout_p=dropout_p, rng=rng)
    if spec.kind == ANNET:
        m = ad.softmax(feats)
        u = ad.tanh(_f_preactivation(params, ad.mul(s, m), train=train,
                                     dropout_p=dropout_p, rng=rng))
        return u, m, None

    # DANNet: split the attention features into the input mask and the
    # output mask, softmax-normalized separately.
    m = ad.softmax(ad.slice_cols(feats, 0, spec.input_dim))
    m_u = ad.softmax(ad.slice_cols(feats, spec.input_dim, spec.mask_dim))
    u_pre = _f_preactivation(params, ad.mul(s, m), train=train,
                             dropout_p=dropout_p, rng=rng)
    u = ad.tanh(ad.mul(m_u, u_pre))
    return u, m, m_u


def predict(params: ControllerParams, obs: np.ndarray):
    """Eval-mode forward pass; returns (u, m, m_u) as numpy arrays."""
    u, m, m_u = forward_graph(params, obs, train=False)
    return (u.value,
            None if m is None else m.value,
            None if m_u is None else m_u.value)


def controller_loss(params: ControllerParams, obs: np.ndarray, targets: np.ndarray,
                    *, train: bool = False, dropout_p: float = DROPOUT_P,
                    rng: np.random.Generator | None = None) -> Tensor:
    """MSE between predicted and target controls, differentiable w.r.t. all
    parameters (theta and, where present, psi)."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.shape[0] == 0:
        raise ValueError("empty training batch")
    u, _, _ = forward_graph(params, obs, train=train, dropout_p=dropout_p, rng=rng)
    return ad.mse(u, targets)
