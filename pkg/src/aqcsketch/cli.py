"""Command-line entry point: ``aqcsketch {gen-target,compile,bench,verify}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench, verification
from .io import TargetFile, write_json, write_rows
from .lbfgs import LbfgsConfig
from .optimizers import METHODS, EpochPlan, SgdConfig, sgd, sketch_and_solve

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


def cmd_gen_target(n: int, L: int, seed: int, out) -> TargetFile:
    target = bench.make_target(n, L, seed)
    target.save(out)
    return target


def cmd_compile(
    target_path,
    method: str,
    m: int,
    epochs: int,
    epoch_iters: int,
    seed: int,
    out,
    force_init_target: bool = False,
    time_limit: float | None = None,
    eta0: float = 1.0,
):
    """Runs one trial and writes its report. Returns the report."""
    target = TargetFile.load(target_path)
    structure = target.structure
    theta_0 = target.theta if force_init_target else None
    if method == "sgd":
        config = SgdConfig(batch_size=m, iterations=epochs * epoch_iters, eta0=eta0, seed=seed)
        _, report = sgd(structure, target.theta, config, theta_0=theta_0)
    elif method in ("ss1", "ss2"):
        report = sketch_and_solve(
            structure,
            target.theta,
            EpochPlan(method, m, epochs, epoch_iters),
            seed,
            LbfgsConfig(),
            theta_0=theta_0,
            time_limit=time_limit,
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    write_json(out, report.to_dict())
    return report


def cmd_bench(grid: bench.BenchGrid, out_csv, out_summary) -> dict:
    rows = bench.run_grid(grid)
    write_rows(out_csv, rows)
    summary = bench.summarize(rows, grid)
    write_json(out_summary, summary)
    return summary


def cmd_verify(level: str, seed: int, out=None) -> tuple[int, list]:
    reports = verification.run_verification(level, seed)
    for r in reports:
        print(r.line())
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    if out is not None:
        write_json(out, [r.to_dict() for r in reports])
    return (EXIT_OK if not failed else EXIT_ERROR), reports


def _dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aqcsketch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-target", help="write a random target circuit")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--cnots", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)

    c = sub.add_parser("compile", help="run one compilation trial")
    c.add_argument("--target", required=True)
    c.add_argument("--method", choices=METHODS, required=True)
    c.add_argument("--sketch-dim", type=int, required=True)
    c.add_argument("--epochs", type=int, default=3)
    c.add_argument("--epoch-iters", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--force-init-target", action="store_true",
                   help="debug: start from the target's own angles")
    c.add_argument("--time-limit", type=float, default=None, help="seconds")
    c.add_argument("--eta0", type=float, default=1.0, help="SGD initial step size")

    b = sub.add_parser("bench", help="run a targets x trials x sketch-dims grid")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--cnots", type=int, required=True)
    b.add_argument("--method", choices=("ss1", "ss2"), required=True)
    b.add_argument("--sketch-dims", type=_dims, required=True)
    b.add_argument("--targets", type=int, default=10)
    b.add_argument("--trials", type=int, default=24)
    b.add_argument("--epochs", type=int, default=3)
    b.add_argument("--epoch-iters", type=int, default=200)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out-csv", required=True)
    b.add_argument("--out-summary", required=True)
    b.add_argument("--threads", type=int, default=None, help="default: $THREADS or core count")
    b.add_argument("--time-limit", type=float, default=bench.TRIAL_TIME_LIMIT,
                   help="per-trial cap in seconds")

    v = sub.add_parser("verify", help="run the verification checks")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None, help="optional JSON report path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "gen-target":
            cmd_gen_target(args.n, args.cnots, args.seed, args.out)
            return EXIT_OK
        if args.command == "compile":
            report = cmd_compile(
                args.target, args.method, args.sketch_dim, args.epochs, args.epoch_iters,
                args.seed, args.out, args.force_init_target, args.time_limit, args.eta0,
            )
            print(f"fidelity={report.fidelity:.17g} success={report.success} status={report.status}")
            return EXIT_OK if report.success else EXIT_FAILED
        if args.command == "bench":
            grid = bench.BenchGrid(
                n=args.n, L=args.cnots, method=args.method, sketch_dims=args.sketch_dims,
                targets=args.targets, trials=args.trials, epochs=args.epochs,
                epoch_iters=args.epoch_iters, seed=args.seed,
                threads=args.threads or bench.default_threads(), time_limit=args.time_limit,
            )
            summary = cmd_bench(grid, args.out_csv, args.out_summary)
            for entry in summary["per_m"]:
                print(
                    f"m={entry['m']} success={entry['success_rate_mean']:.4f}"
                    f" +- {entry['success_rate_std']:.4f} time={entry['wall_time_mean_s']:.2f}s"
                )
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(args.level, args.seed, args.out)[0]
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
