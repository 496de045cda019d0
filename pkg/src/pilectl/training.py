"""Supervised training of the controllers on demonstration datasets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controllers import (ControllerParams, ControllerSpec, build_controller,
                          controller_loss, predict)
from .functional import mse_loss
from .optim import RAdam

DEFAULT_EPOCHS = 150
DEFAULT_BATCH = 512
DEFAULT_LR = 1e-3
DEFAULT_DROPOUT = 0.35


@dataclass
class TrainConfig:
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH
    lr: float = DEFAULT_LR
    dropout_p: float = DEFAULT_DROPOUT
    seed: int = 0
    shuffle: bool = True


@dataclass
class LossCurve:
    train: list[float] = field(default_factory=list)
    val: list[float] = field(default_factory=list)


def _merged_paramset(params: ControllerParams):
    from .autodiff import ParamSet

    merged = ParamSet()
    for name, t in params.all_tensors():
        merged._by_name[name] = t  # share tensors; optimizer updates in place
    return merged


def train(spec: ControllerSpec, dataset, config: TrainConfig = TrainConfig(),
          val_dataset=None):
    """Mini-batch RAdam training; deterministic under config.seed.

    Returns (ControllerParams, LossCurve). Validation loss is recorded per
    epoch when a validation dataset is given.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("empty training dataset")
    if dataset.obs.shape[1] != 7:
        raise ValueError(f"dataset must carry 7-channel observations, "
                         f"got {dataset.obs.shape}")
    root = np.random.default_rng(config.seed)
    init_rng, shuffle_rng, drop_rng = root.spawn(3)

    params = build_controller(spec, init_rng)
    params.norm_mean = dataset.mean.copy()
    params.norm_std = dataset.std.copy()
    opt = RAdam(_merged_paramset(params), lr=config.lr)

    batch = min(config.batch_size, n)
    curve = LossCurve()
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_losses = []
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            opt.params.zero_grad()
            loss = controller_loss(params, dataset.obs[idx], dataset.u[idx],
                                   train=True, dropout_p=config.dropout_p,
                                   rng=drop_rng)
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.value))
        curve.train.append(float(np.mean(epoch_losses)))
        if val_dataset is not None:
            curve.val.append(validate(params, val_dataset))
    return params, curve


def validate(params: ControllerParams, dataset) -> float:
    """Eval-mode MSE over a dataset; does not touch the parameters."""
    if len(dataset) == 0:
        raise ValueError("empty validation dataset")
    chunks = []
    for start in range(0, len(dataset), 8192):
        u_pred, _, _ = predict(params, dataset.obs[start:start + 8192])
        chunks.append(u_pred)
    return mse_loss(np.concatenate(chunks), dataset.u)
