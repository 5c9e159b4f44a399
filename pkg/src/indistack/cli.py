"""Command-line entry point.

Subcommands: train, simulate, eval, check-independence, heatmap. Every
artifact-producing command writes a `<output>.manifest.json` with the
scenario digest, seeds, model digests, and wall time. All CSV/JSON payloads
are byte-identical across reruns with the same arguments and seeds; the
manifest is the one file allowed to differ (it records wall time).

Exit codes: 0 ok, 2 configuration error, 3 data/shape error, 4 numerical or
training failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    NumericalError,
    ShapeError,
    TrainingError,
)
from .manifest import RunManifest
from .value_net import ValueNet

BUILTIN_NAMES = ("s51", "s52", "s53")


def _fmt(value) -> str:
    """Stable decimal text for floats (repr round-trips float64 exactly)."""
    return repr(float(value))


def _resolve_scenario(arg: str):
    from .scenarios import ScenarioConfig, builtin

    if arg in BUILTIN_NAMES:
        return builtin(arg)
    if Path(arg).exists():
        return ScenarioConfig.load(arg)
    raise ConfigurationError(
        f"scenario {arg!r} is neither a builtin ({', '.join(BUILTIN_NAMES)}) "
        f"nor an existing file"
    )


def _load_models(models_dir: Path, keys) -> dict:
    nets = {}
    for key in keys:
        path = models_dir / f"{key}.json"
        if not path.exists():
            raise ConfigurationError(f"model file not found: {path}")
        nets[key] = ValueNet.load(path)
    return nets


def _method_nets(cfg, method: str, models_dir: Path):
    from .scenarios import resolve_method_models

    cache: dict[str, ValueNet] = {}

    def load(key: str) -> ValueNet:
        if key not in cache:
            cache[key] = _load_models(models_dir, [key])[key]
        return cache[key]

    nets, penalties = resolve_method_models(cfg, method, load)
    return nets, penalties, cache


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    from .scenarios import train_task

    cfg = _resolve_scenario(args.scenario)
    manifest = RunManifest("train", vars(args), cfg.digest())
    seed = args.seed if args.seed is not None else cfg.seeds.get("train", 0)
    manifest.add_seed("train", seed)
    priors = []
    if args.independent_to:
        lam = args.lam
        if lam is None:
            lam = cfg.lambdas.get(args.task)
        if lam is None:
            raise ConfigurationError(
                f"no penalty weight: pass --lambda or define lambdas[{args.task!r}]"
            )
        for path in args.independent_to.split(","):
            prior = ValueNet.load(path)
            priors.append((prior, float(lam)))
            manifest.add_model(Path(path).stem, path)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics_path = Path(args.metrics) if args.metrics else out.with_suffix(".metrics.csv")
    overrides = {
        "iterations": args.iterations,
        "dataset_size": args.dataset_size,
        "horizon": args.horizon,
        "hidden": [int(h) for h in args.hidden.split(",")] if args.hidden else None,
    }
    rows = []

    def on_iteration(rec):
        rows.append(rec)

    try:
        net = train_task(
            cfg,
            args.task,
            seed,
            independent_to=priors,
            on_iteration=on_iteration,
            overrides=overrides,
        )
    finally:
        # keep partial metrics even when training aborts
        with open(metrics_path, "w") as fh:
            fh.write("iteration,mean_target,loss\n")
            for rec in rows:
                fh.write(
                    f"{rec['iteration']},{_fmt(rec['mean_target'])},{_fmt(rec['loss'])}\n"
                )
    net.save(out)
    manifest.add_model(out.stem, out)
    manifest.add_output(out)
    manifest.add_output(metrics_path)
    manifest.write(out)
    print(f"wrote {out} ({len(rows)} iterations, metrics in {metrics_path})")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _parse_x0(arg: str, cfg, seed: int) -> np.ndarray:
    from .scenarios import sample_initial_states

    n = 2 * cfg.num_robots
    if arg.startswith("random:"):
        count = int(arg.split(":", 1)[1])
        return sample_initial_states(cfg, count, seed)
    if Path(arg).exists():
        data = np.loadtxt(arg, delimiter=",", ndmin=2)
        if data.shape[1] != n:
            raise ShapeError(f"x0 file has {data.shape[1]} columns, state dim is {n}")
        return data
    try:
        states = [
            [float(v) for v in chunk.split(",")] for chunk in arg.split(";") if chunk
        ]
    except ValueError:
        raise ConfigurationError(f"cannot parse --x0 value {arg!r}") from None
    X = np.asarray(states, dtype=float)
    if X.shape[1] != n:
        raise ShapeError(f"--x0 rows have {X.shape[1]} values, state dim is {n}")
    return X


def _write_trajectory_csv(path, traj, task_names, n: int, m: int) -> None:
    with open(path, "w") as fh:
        header = (
            ["t"]
            + [f"x{i}" for i in range(n)]
            + [f"u{i}" for i in range(m)]
            + [f"delta{i}" for i in range(len(task_names))]
            + [f"J_{name}" for name in task_names]
        )
        fh.write(",".join(header) + "\n")
        steps = traj.U.shape[0]
        for k in range(len(traj.t)):
            cells = [_fmt(traj.t[k])]
            cells += [_fmt(v) for v in traj.X[k]]
            if k < steps:
                cells += [_fmt(v) for v in traj.U[k]]
                cells += [_fmt(v) for v in traj.delta[k]]
            else:
                cells += [""] * (m + len(task_names))
            cells += [_fmt(v) for v in traj.values[k]]
            fh.write(",".join(cells) + "\n")


def cmd_simulate(args) -> int:
    from .plots import save_trajectory_svg
    from .scenarios import build_stack, simulate_stack

    cfg = _resolve_scenario(args.scenario)
    manifest = RunManifest("simulate", vars(args), cfg.digest())
    seed = args.seed if args.seed is not None else cfg.seeds.get("eval", 1)
    manifest.add_seed("eval", seed)
    nets, penalties, cache = _method_nets(cfg, args.method, Path(args.models))
    for key in cache:
        manifest.add_model(key, Path(args.models) / f"{key}.json")
    order = args.stack.split(",") if args.stack else None
    stack = build_stack(cfg, nets, penalties, order=order)
    sys_ = cfg.system()
    starts = _parse_x0(args.x0, cfg, seed)
    steps = int(round(cfg.episode_seconds / cfg.dt))
    out = Path(args.traj)
    out.parent.mkdir(parents=True, exist_ok=True)
    names = stack.names()
    outputs = []
    for idx, x0 in enumerate(starts):
        traj = simulate_stack(stack, sys_, x0, cfg.dt, steps, regions=cfg.regions)
        path = out if len(starts) == 1 else out.with_stem(f"{out.stem}_{idx:03d}")
        _write_trajectory_csv(path, traj, names, sys_.n, sys_.m)
        outputs.append(path)
        if args.plot:
            plot_path = Path(args.plot)
            if len(starts) > 1:
                plot_path = plot_path.with_stem(f"{plot_path.stem}_{idx:03d}")
            save_trajectory_svg(traj.X, cfg.regions, plot_path)
            manifest.add_output(plot_path)
    for path in outputs:
        manifest.add_output(path)
    manifest.write(out)
    print(f"wrote {len(outputs)} trajectory file(s) to {out.parent}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    from .scenarios import evaluate

    cfg = _resolve_scenario(args.scenario)
    manifest = RunManifest("eval", vars(args), cfg.digest())
    seed = args.seed if args.seed is not None else cfg.seeds.get("eval", 1)
    trials = args.trials if args.trials is not None else cfg.trials
    manifest.add_seed("eval", seed)
    methods = args.method or list(cfg.methods)
    models_dir = Path(args.models)
    task_names = list(cfg.success)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    results = []
    for method in methods:
        nets, penalties, cache = _method_nets(cfg, method, models_dir)
        for key in cache:
            manifest.add_model(f"{method}:{key}", models_dir / f"{key}.json")
        results.append(
            evaluate(cfg, nets, trials, seed, penalties=penalties, method=method)
        )
    with open(out, "w") as fh:
        header = ["method", "trial", "success"]
        header += [f"final_q_{name}" for name in task_names]
        header += ["entries", "steps", "reason"]
        fh.write(",".join(header) + "\n")
        for res in results:
            for rec in res.records:
                cells = [rec.method, str(rec.trial), str(int(rec.success))]
                cells += [_fmt(rec.final_costs[name]) for name in task_names]
                cells += [str(rec.entries), str(rec.steps), rec.reason.replace(",", ";")]
                fh.write(",".join(cells) + "\n")
    manifest.add_output(out)
    manifest.write(out)
    for res in results:
        print(f"{res.method}: success rate {res.success_rate:.3f} over {trials} trials")
    return 0


# ---------------------------------------------------------------------------
# check-independence
# ---------------------------------------------------------------------------


def cmd_check_independence(args) -> int:
    from .independence import report
    from .tasks import lift_task

    cfg = _resolve_scenario(args.scenario)
    manifest = RunManifest("check-independence", vars(args), cfg.digest())
    manifest.add_seed("report", args.seed)
    sys_ = cfg.system()
    nets = []
    for path in args.models.split(","):
        net = ValueNet.load(path)
        manifest.add_model(Path(path).stem, path)
        if net.n != sys_.n:
            if sys_.robot_dim is not None and net.n == sys_.robot_dim:
                stem = Path(path).stem
                robots = (
                    cfg.assigned_robots(stem)
                    if stem in cfg.tasks
                    else tuple(range(cfg.num_robots))
                )
                net = lift_task(net, robots, sys_)
            else:
                raise ShapeError(
                    f"model {path} has dim {net.n}; scenario state dim is {sys_.n}"
                )
        nets.append(net)
    box = cfg.training.get("box", [[-2.0, -2.0], [2.0, 2.0]])
    lo = list(box[0]) * cfg.num_robots
    hi = list(box[1]) * cfg.num_robots
    rep = report(nets, sys_, (lo, hi), args.samples, tol=args.tol, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rep.save(out)
    manifest.add_output(out)
    manifest.write(out)
    print(
        f"fraction independent {rep.fraction_independent:.4f}, "
        f"mean |cos| {rep.mean_abs_cosine:.4f} over {rep.samples} samples"
    )
    return 0


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------


def cmd_heatmap(args) -> int:
    from .plots import save_heatmap_svg, value_grid

    net = ValueNet.load(args.model)
    regions = ()
    digest = None
    if args.scenario:
        cfg = _resolve_scenario(args.scenario)
        regions = cfg.regions
        digest = cfg.digest()
    manifest = RunManifest("heatmap", vars(args), digest)
    manifest.add_model(Path(args.model).stem, args.model)
    dims = tuple(int(d) for d in args.dims.split(","))
    fixed = None
    if args.fixed:
        fixed = [float(v) for v in args.fixed.split(",")]
    values, xs, ys = value_grid(
        net, (args.xlim[0], args.xlim[1]), (args.ylim[0], args.ylim[1]),
        args.grid, dims=dims, fixed=fixed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_heatmap_svg(values, xs, ys, out, regions=regions, title=Path(args.model).stem)
    csv_path = args.csv or out.with_suffix(".csv")
    with open(csv_path, "w") as fh:
        fh.write("y\\x," + ",".join(_fmt(x) for x in xs) + "\n")
        for i, y in enumerate(ys):
            fh.write(_fmt(y) + "," + ",".join(_fmt(v) for v in values[i]) + "\n")
    manifest.add_output(out)
    manifest.add_output(csv_path)
    manifest.write(out)
    print(f"wrote {out} and {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indistack",
        description="Train task value functions and compose them in a "
        "prioritized min-norm controller.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one task of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--independent-to", default=None,
                   help="comma-separated prior model files to stay independent of")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="interference penalty weight (default: scenario lambdas)")
    p.add_argument("--metrics", default=None, help="metrics CSV path")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--dataset-size", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--hidden", default=None, help="comma-separated hidden sizes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="roll out a stack and dump trajectories")
    p.add_argument("--scenario", required=True)
    p.add_argument("--models", required=True, help="directory with model JSON files")
    p.add_argument("--stack", default=None, help="task order, e.g. avoid,goto")
    p.add_argument("--method", default="independent")
    p.add_argument("--x0", required=True, help="csv file | random:K | inline v1,v2;...")
    p.add_argument("--traj", required=True, help="trajectory CSV output")
    p.add_argument("--plot", default=None, help="optional trajectory SVG")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="closed-loop success rates over seeded trials")
    p.add_argument("--scenario", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--method", action="append", default=None,
                   help="method name (repeatable; default: all)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check-independence", help="gradient independence report")
    p.add_argument("--models", required=True, help="comma-separated model files")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check_independence)

    p = sub.add_parser("heatmap", help="value-function raster (SVG + CSV)")
    p.add_argument("--model", required=True)
    p.add_argument("--scenario", default=None)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--xlim", type=float, nargs=2, default=(-3.0, 3.0))
    p.add_argument("--ylim", type=float, nargs=2, default=(-3.0, 3.0))
    p.add_argument("--dims", default="0,1")
    p.add_argument("--fixed", default=None,
                   help="comma-separated values for coordinates not in --dims")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_heatmap)
    return parser


EXIT_CODES = {
    ConfigurationError: 2,
    ShapeError: 3,
    TrainingError: 4,
    NumericalError: 4,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for etype, code in EXIT_CODES.items():
            if isinstance(exc, etype):
                return code
        return 1  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
