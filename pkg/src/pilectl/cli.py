"""Command-line entry points for the bucket-filling controller pipeline."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, experiments, plots
from .controllers import (ANNET, DANNET, KINDS, NNET, ControllerSpec,
                          build_controller, controller_loss)
from .dataset import (D1, D2, DataError, DatasetSpec, build_dataset,
                      load_demonstration, load_demonstrations, save_dataset,
                      load_dataset, save_demonstration, split)
from .optim import finite_diff_grad, max_relative_grad_error
from .simulator import (PROFILES, generate_demonstrations, load_profile,
                        policy_from_params, success_rate)
from .training import TrainConfig, _merged_paramset, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CHECK = 4

GRADCHECK_TOL = 1e-5

log = logging.getLogger("pilectl")


def _resolve_condition(name: str):
    if name in PROFILES:
        return PROFILES[name]
    path = Path(name)
    if path.exists():
        return load_profile(path)
    raise DataError(f"unknown condition {name!r} (not a preset or profile file)")


def cmd_gen_demos(args) -> int:
    cond = _resolve_condition(args.condition)
    rng = np.random.default_rng(args.seed)
    demos = generate_demonstrations(args.n, cond, args.rate_hz, rng,
                                    full_fraction=args.full_fraction)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for demo in demos:
        save_demonstration(demo, outdir / f"{demo.id}.csv")
    n_full = sum(d.final_fill >= 0.99 for d in demos)
    with (outdir / "corpus_manifest.txt").open("w") as fh:
        fh.write(f"condition={cond.name}\nn={args.n}\nrate_hz={args.rate_hz!r}\n"
                 f"seed={args.seed}\nn_full={n_full}\n")
    print(f"wrote {len(demos)} demonstrations ({n_full} ideal) to {outdir} "
          f"[seed={args.seed}]")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    demos = load_demonstrations(args.demos)
    ds = build_dataset(demos, DatasetSpec(variant=args.variant))
    save_dataset(ds, args.out)
    print(f"{args.variant}: {len(ds)} samples from {len(ds.demo_ids)} demos "
          f"-> {args.out}")
    return EXIT_OK


def _spec_from_flags(kind: str, use_pt: bool, extended: bool) -> ControllerSpec:
    input_dim = 4 if use_pt else 3
    if kind in (ANNET, DANNET):
        att = input_dim + 3 if extended else input_dim
        return ControllerSpec(kind=kind, input_dim=input_dim, attention_input_dim=att)
    if extended:
        raise argparse.ArgumentTypeError(
            f"--attention-extended requires an attention controller "
            f"(annet/dannet), not {kind}")
    return ControllerSpec(kind=kind, input_dim=input_dim)


def cmd_train(args) -> int:
    try:
        spec = _spec_from_flags(args.controller, args.use_pt, args.attention_extended)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ds = load_dataset(args.dataset)
    val_ds = None
    if args.val_fraction is not None:
        ds, val_ds = split(ds, args.val_fraction, np.random.default_rng(args.seed))
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         lr=args.lr, seed=args.seed)
    print(f"training {args.controller} (input_dim={spec.input_dim}, "
          f"attention={spec.attention_input_dim}) epochs={config.epochs} "
          f"batch={config.batch_size} lr={config.lr} dropout={config.dropout_p} "
          f"seed={config.seed}")
    params, curve = train(spec, ds, config, val_dataset=val_ds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    checkpoint.save_checkpoint(params, out)
    losses_path = out.with_suffix(".losses.csv")
    with losses_path.open("w") as fh:
        fh.write("epoch,train_mse" + (",val_mse" if curve.val else "") + "\n")
        for e, tr in enumerate(curve.train, start=1):
            row = f"{e},{tr!r}"
            if curve.val:
                row += f",{curve.val[e - 1]!r}"
            fh.write(row + "\n")
    if args.plot:
        plots.save_loss_curve(curve, out.with_suffix(".losses.png"))
    print(f"final training MSE {curve.train[-1]:.6g}; checkpoint -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params = checkpoint.load_checkpoint(args.checkpoint)
    cond = _resolve_condition(args.condition)
    rng = np.random.default_rng(args.seed)
    policy = policy_from_params(params)
    from .simulator import rollout

    results = [rollout(policy, cond, rng, sim_rate_hz=args.sim_rate_hz)
               for _ in range(args.n)]
    rate = 100.0 * sum(r.success for r in results) / args.n
    if args.log:
        with Path(args.log).open("w") as fh:
            fh.write("rollout,success,steps,termination,final_fill\n")
            for i, r in enumerate(results):
                fh.write(f"{i},{int(r.success)},{r.steps},{r.termination},"
                         f"{r.final_fill!r}\n")
    print(f"success rate over {args.n} rollouts in {cond.name}: {rate:.1f}% "
          f"[seed={args.seed}]")
    return EXIT_OK


def _parse_grid_file(path, demos_override=None):
    cfg = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()

    def csv_list(key, default):
        if key not in cfg:
            return default
        return [v.strip() for v in cfg[key].split(",") if v.strip()]

    def bool_list(key, default):
        return [v.lower() in ("1", "true", "yes") for v in csv_list(key, default)]

    demos_dir = demos_override or cfg.get("demos")
    if not demos_dir:
        raise DataError(f"{path}: grid file needs a demos= entry")
    demos = load_demonstrations(demos_dir)
    conditions = [_resolve_condition(n) for n in csv_list("eval_conditions", ["summer"])]
    config = TrainConfig(
        epochs=int(cfg.get("epochs", 150)),
        batch_size=int(cfg.get("batch_size", 512)),
        lr=float(cfg.get("lr", 1e-3)),
        seed=int(cfg.get("seed", 0)))
    return experiments.ExperimentGrid(
        demos=demos,
        controllers=csv_list("controllers", ["nnetv2", "annet", "dannet"]),
        use_pt=bool_list("use_pt", ["true"]),
        attention_extended=bool_list("s_prime", ["false"]),
        datasets=csv_list("datasets", [D1, D2]),
        eval_conditions=conditions,
        rollouts_per_cell=int(cfg.get("rollouts", 10)),
        config=config,
        sim_rate_hz=float(cfg.get("sim_rate_hz", 50.0)))


def cmd_experiment(args) -> int:
    grid = _parse_grid_file(args.grid_file, demos_override=args.demos)
    rows = experiments.run_experiment_grid(grid)
    outdir = Path(args.out)
    paths = experiments.write_grid_csvs(rows, grid.eval_conditions, grid.datasets,
                                        outdir)
    if args.plot:
        plots.save_grid(rows, grid.eval_conditions, grid.datasets,
                        outdir / "success_rates.png")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    params = checkpoint.load_checkpoint(args.checkpoint)
    demo = load_demonstration(args.demo)
    cols, data = experiments.trace_comparison(params, demo)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    experiments.write_trace_csv(cols, data, out)
    if args.plot:
        plots.save_trace(cols, data, out.with_suffix(".png"))
    print(f"wrote trace ({len(data)} ticks) -> {out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    kinds = list(KINDS) if args.controller == "all" else [args.controller]
    rng = np.random.default_rng(args.seed)
    worst_overall = 0.0
    for kind in kinds:
        spec = _spec_from_flags(kind, use_pt=True, extended=False)
        params = build_controller(spec, rng)
        obs = rng.normal(size=(4, 7))
        targets = np.clip(rng.normal(scale=0.5, size=(4, 3)), -1, 1)

        def loss_value():
            return float(controller_loss(params, obs, targets).value)

        pset = _merged_paramset(params)
        pset.zero_grad()
        loss = controller_loss(params, obs, targets)
        loss.backward()
        analytic = {name: t.grad.copy() for name, t in pset.items()}
        numeric = finite_diff_grad(loss_value, pset, h=1e-6)
        worst = max_relative_grad_error(analytic, numeric)
        worst_overall = max(worst_overall, worst)
        status = "ok" if worst < GRADCHECK_TOL else "FAIL"
        print(f"{kind}: max relative gradient error {worst:.3e} [{status}]")
    return EXIT_OK if worst_overall < GRADCHECK_TOL else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilectl",
        description="Bucket-filling controllers learned from demonstrations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-demos", help="synthesize expert demonstrations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--condition", default="summer")
    p.add_argument("--rate-hz", type=float, default=500.0)
    p.add_argument("--full-fraction", type=float, default=52 / 72)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen_demos)

    p = sub.add_parser("build-dataset", help="build a d1/d2 training set")
    p.add_argument("--demos", required=True)
    p.add_argument("--variant", choices=[D1, D2], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_dataset)

    p = sub.add_parser("train", help="train a controller")
    p.add_argument("--dataset", required=True)
    p.add_argument("--controller", choices=list(KINDS), required=True)
    p.add_argument("--use-pt", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--attention-extended", action="store_true")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="closed-loop success rate of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--condition", default="summer")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sim-rate-hz", type=float, default=50.0)
    p.add_argument("--log", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("experiment", help="run a success-rate experiment grid")
    p.add_argument("--grid-file", required=True)
    p.add_argument("--demos", default=None, help="override the grid's demos dir")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("inspect", help="trace predicted vs demonstrated controls")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--demo", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("gradcheck", help="reverse-mode vs finite differences")
    p.add_argument("--controller", choices=list(KINDS) + ["all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PILECTL_LOGLEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DataError, checkpoint.CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
