"""Demonstration storage and the two training-set constructions.

A demonstration is a timestamped observation-action sequence recorded at a
fixed rate. The "full" variant (d1) keeps every demonstration at its native
rate; the "curated" variant (d2) keeps only demonstrations that finish with a
full bucket and decimates them to 20 Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controllers import CHANNELS, N_CONTROLS

CSV_HEADER = ("t_s,theta1_rad,theta2_rad,p_d_bar,p_t_bar,p_l_bar,p_b_bar,"
              "a_norm,u_theta1,u_theta2,u_g,fill")
D1 = "d1"
D2 = "d2"
DEFAULT_IDEAL_FILL = 0.99
DEFAULT_TARGET_HZ = 20.0
STD_FLOOR = 1e-8


class DataError(Exception):
    """Malformed or inconsistent demonstration / dataset data."""


@dataclass
class Demonstration:
    id: str
    sample_rate_hz: float
    t: np.ndarray          # (n,) seconds, strictly increasing
    obs: np.ndarray        # (n, 7) extended sensor vectors
    u: np.ndarray          # (n, 3) controls in [-1, 1]
    fill: np.ndarray       # (n,) bucket fill fraction

    def __len__(self):
        return len(self.t)

    @property
    def final_fill(self) -> float:
        return float(self.fill[-1])

    def validate(self):
        n = len(self.t)
        if not (len(self.obs) == len(self.u) == len(self.fill) == n) or n == 0:
            raise DataError(f"{self.id}: inconsistent or empty record arrays")
        dt = np.diff(self.t)
        if np.any(dt <= 0):
            row = int(np.argmax(dt <= 0)) + 1
            raise DataError(f"{self.id}: non-monotone time at row {row}")
        nominal = 1.0 / self.sample_rate_hz
        if np.any(np.abs(dt - nominal) > 0.01 * nominal):
            row = int(np.argmax(np.abs(dt - nominal) > 0.01 * nominal)) + 1
            raise DataError(f"{self.id}: sample spacing off by >1% at row {row}")
        if np.any(np.abs(self.u) > 1.0):
            row = int(np.argmax(np.any(np.abs(self.u) > 1.0, axis=1)))
            raise DataError(f"{self.id}: control out of [-1, 1] at row {row}")
        if np.any((self.fill < 0) | (self.fill > 1)):
            raise DataError(f"{self.id}: fill outside [0, 1]")


def save_demonstration(demo: Demonstration, path):
    path = Path(path)
    data = np.column_stack([demo.t, demo.obs, demo.u, demo.fill])
    with path.open("w") as fh:
        fh.write(f"# rate_hz={demo.sample_rate_hz!r}\n")
        fh.write(CSV_HEADER + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def load_demonstration(path) -> Demonstration:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
        if first.startswith("# rate_hz="):
            rate = float(first.split("=", 1)[1])
            header = fh.readline().strip()
        else:
            rate = None
            header = first
        if header != CSV_HEADER:
            raise DataError(f"{path}: unexpected CSV header {header!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataError(f"{path}: malformed row ({exc})") from exc
    if data.shape[1] != 1 + len(CHANNELS) + N_CONTROLS + 1:
        raise DataError(f"{path}: expected {1 + len(CHANNELS) + N_CONTROLS + 1} "
                        f"columns, got {data.shape[1]}")
    t = data[:, 0]
    if rate is None:
        if len(t) < 2:
            raise DataError(f"{path}: cannot infer sample rate from one row")
        rate = 1.0 / float(np.median(np.diff(t)))
    demo = Demonstration(
        id=path.stem, sample_rate_hz=rate, t=t,
        obs=data[:, 1:1 + len(CHANNELS)],
        u=data[:, 1 + len(CHANNELS):1 + len(CHANNELS) + N_CONTROLS],
        fill=data[:, -1])
    demo.validate()
    return demo


def load_demonstrations(path) -> list[Demonstration]:
    """Load every *.csv in a directory, sorted by demonstration id."""
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"{path} is not a directory")
    return [load_demonstration(p) for p in sorted(path.glob("*.csv"))]


def decimate(demo: Demonstration, target_hz: float) -> Demonstration:
    """Keep every (rate/target)-th record starting at index 0."""
    factor = demo.sample_rate_hz / target_hz
    if abs(factor - round(factor)) > 1e-9 or factor < 1:
        raise DataError(
            f"{demo.id}: {demo.sample_rate_hz} Hz does not decimate to "
            f"{target_hz} Hz by an integer factor")
    k = int(round(factor))
    if k == 1:
        return demo
    return Demonstration(
        id=demo.id, sample_rate_hz=target_hz, t=demo.t[::k],
        obs=demo.obs[::k], u=demo.u[::k], fill=demo.fill[::k])


def filter_ideal(demos, threshold: float = DEFAULT_IDEAL_FILL):
    """Keep demonstrations that finish with a (near-)full bucket."""
    return [d for d in demos if d.final_fill >= threshold]


@dataclass(frozen=True)
class DatasetSpec:
    variant: str = D1
    ideal_fill_threshold: float = DEFAULT_IDEAL_FILL
    target_rate_hz: float = DEFAULT_TARGET_HZ

    def __post_init__(self):
        if self.variant not in (D1, D2):
            raise ValueError(f"unknown dataset variant {self.variant!r}")


@dataclass
class Dataset:
    obs: np.ndarray         # (n, 7)
    u: np.ndarray           # (n, 3)
    demo_ids: list[str]
    demo_index: np.ndarray  # (n,) index into demo_ids per sample
    provenance: dict = field(default_factory=dict)
    mean: np.ndarray = field(default_factory=lambda: np.zeros(len(CHANNELS)))
    std: np.ndarray = field(default_factory=lambda: np.ones(len(CHANNELS)))

    def __len__(self):
        return len(self.obs)


def _norm_stats(obs):
    mean = obs.mean(axis=0)
    std = np.maximum(obs.std(axis=0), STD_FLOOR)
    return mean, std


def build_dataset(demos, spec: DatasetSpec = DatasetSpec()) -> Dataset:
    """Flatten demonstrations into observation-action pairs per the variant."""
    if not demos:
        raise DataError("no demonstrations given")
    selected = list(demos)
    if spec.variant == D2:
        selected = filter_ideal(selected, spec.ideal_fill_threshold)
        selected = [decimate(d, spec.target_rate_hz) for d in selected]
    if not selected:
        raise DataError("dataset construction produced no samples")
    obs = np.concatenate([d.obs for d in selected])
    u = np.concatenate([d.u for d in selected])
    demo_index = np.concatenate(
        [np.full(len(d), i, dtype=np.int64) for i, d in enumerate(selected)])
    mean, std = _norm_stats(obs)
    return Dataset(
        obs=obs, u=u,
        demo_ids=[d.id for d in selected], demo_index=demo_index,
        provenance={"variant": spec.variant,
                    "source_demos": [d.id for d in selected],
                    "n_samples": len(obs)},
        mean=mean, std=std)


def single_action_fraction(dataset: Dataset, epsilon: float = 0.05) -> float:
    """Fraction of samples where exactly one control exceeds epsilon."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    active = (np.abs(dataset.u) > epsilon).sum(axis=1)
    return float(np.mean(active == 1))


def split(dataset: Dataset, val_fraction: float, rng: np.random.Generator):
    """Demonstration-level train/validation split (no temporal leakage)."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n_demos = len(dataset.demo_ids)
    n_val = max(1, int(round(n_demos * val_fraction)))
    if n_demos < 2 or n_val >= n_demos:
        raise DataError(f"cannot split {n_demos} demos with val_fraction={val_fraction}")
    perm = rng.permutation(n_demos)
    val_set = set(perm[:n_val].tolist())

    def subset(keep):
        mask = np.isin(dataset.demo_index, list(keep))
        ids = [dataset.demo_ids[i] for i in sorted(keep)]
        remap = {old: new for new, old in enumerate(sorted(keep))}
        idx = np.array([remap[i] for i in dataset.demo_index[mask]], dtype=np.int64)
        obs = dataset.obs[mask]
        mean, std = _norm_stats(obs)
        prov = dict(dataset.provenance, source_demos=ids, n_samples=int(mask.sum()))
        return Dataset(obs=obs, u=dataset.u[mask], demo_ids=ids, demo_index=idx,
                       provenance=prov, mean=mean, std=std)

    train_keep = set(range(n_demos)) - val_set
    return subset(train_keep), subset(val_set)


# ---------------------------------------------------------------------------
# on-disk dataset store: manifest + samples CSV


def save_dataset(dataset: Dataset, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "manifest.txt").open("w") as fh:
        fh.write(f"variant={dataset.provenance.get('variant', '?')}\n")
        fh.write(f"n_samples={len(dataset)}\n")
        fh.write(f"n_demos={len(dataset.demo_ids)}\n")
        fh.write(f"demos={','.join(dataset.demo_ids)}\n")
        fh.write("mean=" + ",".join(f"{float(v)!r}" for v in dataset.mean) + "\n")
        fh.write("std=" + ",".join(f"{float(v)!r}" for v in dataset.std) + "\n")
    data = np.column_stack([dataset.demo_index, dataset.obs, dataset.u])
    with (outdir / "samples.csv").open("w") as fh:
        fh.write("demo_index," + ",".join(CHANNELS) + ",u_theta1,u_theta2,u_g\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def load_dataset(outdir) -> Dataset:
    outdir = Path(outdir)
    manifest_path = outdir / "manifest.txt"
    samples_path = outdir / "samples.csv"
    if not manifest_path.exists() or not samples_path.exists():
        raise DataError(f"{outdir} is not a dataset directory")
    meta = {}
    for line in manifest_path.read_text().splitlines():
        key, _, value = line.partition("=")
        meta[key] = value
    with samples_path.open() as fh:
        fh.readline()
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    demo_ids = meta["demos"].split(",") if meta.get("demos") else []
    ds = Dataset(
        obs=data[:, 1:1 + len(CHANNELS)],
        u=data[:, 1 + len(CHANNELS):],
        demo_ids=demo_ids,
        demo_index=data[:, 0].astype(np.int64),
        provenance={"variant": meta.get("variant", "?"),
                    "source_demos": demo_ids, "n_samples": len(data)},
        mean=np.array([float(v) for v in meta["mean"].split(",")]),
        std=np.array([float(v) for v in meta["std"].split(",")]))
    if len(ds) != int(meta["n_samples"]):
        raise DataError(f"{outdir}: manifest sample count {meta['n_samples']} "
                        f"does not match {len(ds)} rows")
    return ds
