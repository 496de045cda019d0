"""Figure rendering for the report outputs (next to their CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CONTROL_LABELS = (r"$u_{\theta_1}$ (boom)", r"$u_{\theta_2}$ (bucket)",
                  r"$u_g$ (throttle)")


def save_loss_curve(curve, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = np.arange(1, len(curve.train) + 1)
    ax.plot(epochs, curve.train, label="training")
    if curve.val:
        ax.plot(epochs, curve.val, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_multi_trial(results: dict, path):
    """Mean validation loss with a +-1 std shaded band per controller."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, res in results.items():
        epochs = np.arange(1, len(res.mean) + 1)
        ax.plot(epochs, res.mean, label=label)
        ax.fill_between(epochs, res.mean - res.std, res.mean + res.std, alpha=0.25)
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation MSE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace(cols, data, path):
    """Demonstrated vs predicted controls, plus mask panels when present."""
    has_masks = any(c.startswith("m_") for c in cols)
    n_rows = 2 if has_masks else 1
    fig, axes = plt.subplots(n_rows, 1, figsize=(7, 3.2 * n_rows), sharex=True,
                             squeeze=False)
    t = data[:, cols.index("t")]
    ax = axes[0][0]
    for k, label in enumerate(CONTROL_LABELS):
        ax.plot(t, data[:, 1 + k], lw=1.0, label=f"{label} demo")
        ax.plot(t, data[:, 4 + k], lw=1.0, ls="--", label=f"{label} pred")
    ax.set_ylabel("control")
    ax.legend(fontsize=7, ncol=2)
    if has_masks:
        ax = axes[1][0]
        for j, c in enumerate(cols):
            if c.startswith("m_"):
                ax.plot(t, data[:, j], lw=1.0, label=c)
        ax.set_ylabel("attention mask")
        ax.legend(fontsize=7, ncol=3)
    axes[-1][0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_grid(rows: list[dict], conditions, datasets, path):
    """Grouped bars of success rates per controller/sensor row."""
    labels = [f"{r['controller']}"
              + ("+pt" if r["p_t"] else "")
              + ("+s'" if r["s_prime"] else "") for r in rows]
    keys = [f"{c.name}:{d}" for c in conditions for d in datasets]
    x = np.arange(len(labels))
    width = 0.8 / max(1, len(keys))
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(labels), 4))
    for i, key in enumerate(keys):
        vals = [r.get(key, np.nan) for r in rows]
        ax.bar(x + i * width, vals, width, label=key)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("success rate [%]")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
