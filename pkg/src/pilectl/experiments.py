"""Multi-trial studies, the experiment grid and trace inspection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controllers import ANNET, DANNET, NNET, NNETV2, ControllerSpec, predict
from .dataset import D1, D2, Dataset, DatasetSpec, Demonstration, build_dataset
from .simulator import ConditionProfile, policy_from_params, success_rate
from .training import TrainConfig, train, validate

log = logging.getLogger(__name__)


@dataclass
class MultiTrialResult:
    """Per-epoch validation-loss statistics over independently seeded trainings."""

    curves: np.ndarray      # (n_trials, epochs)
    seeds: list[int]

    @property
    def mean(self) -> np.ndarray:
        return self.curves.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.curves.std(axis=0)


def multi_trial(spec: ControllerSpec, train_ds: Dataset, val_ds: Dataset,
                config: TrainConfig, n_trials: int,
                seeds: list[int] | None = None) -> MultiTrialResult:
    """Repeat training with fresh initialization/shuffle seeds and collect
    the per-epoch validation loss of every trial."""
    if n_trials < 2:
        raise ValueError(f"need at least 2 trials, got {n_trials}")
    if seeds is None:
        seeds = [config.seed + k for k in range(n_trials)]
    elif len(seeds) != n_trials:
        raise ValueError("len(seeds) must equal n_trials")
    curves = []
    for seed in seeds:
        _, curve = train(spec, train_ds, replace(config, seed=seed), val_dataset=val_ds)
        curves.append(curve.val)
    return MultiTrialResult(curves=np.array(curves), seeds=list(seeds))


def write_multi_trial_csv(results: dict[str, MultiTrialResult], path):
    """One row per epoch; mean and std columns per controller label."""
    labels = list(results)
    epochs = len(next(iter(results.values())).mean)
    with Path(path).open("w") as fh:
        cols = ["epoch"] + [f"{lab}_{stat}" for lab in labels for stat in ("mean", "std")]
        fh.write(",".join(cols) + "\n")
        for e in range(epochs):
            row = [str(e + 1)]
            for lab in labels:
                row.append(f"{float(results[lab].mean[e])!r}")
                row.append(f"{float(results[lab].std[e])!r}")
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# experiment grid


@dataclass
class ExperimentGrid:
    """Axes of the success-rate tables: controllers x sensors x datasets,
    evaluated by closed-loop rollouts under each listed condition."""

    demos: list[Demonstration]
    controllers: list[str] = field(default_factory=lambda: [NNETV2, ANNET, DANNET])
    use_pt: list[bool] = field(default_factory=lambda: [True])
    attention_extended: list[bool] = field(default_factory=lambda: [False])
    datasets: list[str] = field(default_factory=lambda: [D1, D2])
    eval_conditions: list[ConditionProfile] = field(default_factory=list)
    rollouts_per_cell: int = 10
    config: TrainConfig = field(default_factory=TrainConfig)
    sim_rate_hz: float = 50.0


def _spec_for_cell(kind: str, use_pt: bool, extended: bool) -> ControllerSpec | None:
    input_dim = 4 if use_pt else 3
    if kind in (ANNET, DANNET):
        att = input_dim + 3 if extended else input_dim
        return ControllerSpec(kind=kind, input_dim=input_dim, attention_input_dim=att)
    if extended:
        if kind == NNET:
            return None  # no way to consume the extra sensors
        # NNetV2 takes the extra sensors by plain input concatenation
        return ControllerSpec(kind=kind, input_dim=input_dim + 3)
    return ControllerSpec(kind=kind, input_dim=input_dim)


def run_experiment_grid(grid: ExperimentGrid) -> list[dict]:
    """Train one controller per cell and measure closed-loop success rates.

    Returns one record per (controller, p_t, s') row with a success-rate
    column per (condition, dataset variant) pair.
    """
    variants = {}
    for name in grid.datasets:
        variants[name] = build_dataset(grid.demos, DatasetSpec(variant=name))
    rows = []
    for kind in grid.controllers:
        for use_pt in grid.use_pt:
            for extended in grid.attention_extended:
                spec = _spec_for_cell(kind, use_pt, extended)
                if spec is None:
                    log.info("skipping %s with extended sensors: unsupported", kind)
                    continue
                row = {"controller": kind, "p_t": use_pt, "s_prime": extended}
                for ds_name, ds in variants.items():
                    params, _ = train(spec, ds, grid.config)
                    policy = policy_from_params(params)
                    for cond in grid.eval_conditions:
                        rng = np.random.default_rng(grid.config.seed + 10_000)
                        rate = success_rate(policy, cond, grid.rollouts_per_cell,
                                            rng, sim_rate_hz=grid.sim_rate_hz)
                        row[f"{cond.name}:{ds_name}"] = rate
                rows.append(row)
    return rows


def write_grid_csvs(rows: list[dict], conditions, datasets, outdir) -> list[Path]:
    """One CSV per eval condition, rows = controller x sensors, columns =
    dataset variants (the layout of the success-rate tables)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for cond in conditions:
        path = outdir / f"success_rates_{cond.name}.csv"
        with path.open("w") as fh:
            fh.write("controller,p_t,s_prime," + ",".join(datasets) + "\n")
            for row in rows:
                cells = [row["controller"],
                         "yes" if row["p_t"] else "no",
                         "yes" if row["s_prime"] else "no"]
                cells += [f"{row[f'{cond.name}:{ds}']:.1f}" for ds in datasets]
                fh.write(",".join(cells) + "\n")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# trace inspection (predicted vs demonstrated controls, attention masks)


def trace_comparison(params, demo: Demonstration) -> tuple[list[str], np.ndarray]:
    """Per-tick predicted vs demonstrated controls plus any attention masks.

    Returns (column names, data matrix) ready for CSV export or plotting.
    """
    u_pred, m, m_u = predict(params, demo.obs)
    cols = ["t", "u_theta1_demo", "u_theta2_demo", "u_g_demo",
            "u_theta1_pred", "u_theta2_pred", "u_g_pred"]
    blocks = [demo.t[:, None], demo.u, u_pred]
    if m is not None:
        cols += [f"m_{j}" for j in range(m.shape[1])]
        blocks.append(m)
    if m_u is not None:
        cols += ["m_u_theta1", "m_u_theta2", "m_u_g"]
        blocks.append(m_u)
    return cols, np.column_stack(blocks)


def write_trace_csv(cols, data, path):
    with Path(path).open("w") as fh:
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
