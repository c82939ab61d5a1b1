"""
Experiment grid: targets x trials x sketch dimensions, run in parallel and
summarized as per-target success rates.

Row content apart from the wall time is a pure function of
``(master seed, target_id, trial_id, m)``, whatever the degree of parallelism
or completion order.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .engine import build_structure
from .io import TargetFile
from .optimizers import EpochPlan, derive_seed, init_theta, sketch_and_solve

logger = logging.getLogger(__name__)

TRIAL_TIME_LIMIT = 2 * 3600.0


def default_threads() -> int:
    """``THREADS`` from the environment, else the number of cores."""
    env = os.environ.get("THREADS")
    if env:
        value = int(env)
        if value < 1:
            raise ValueError("THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


def make_target(n: int, L: int, seed: int) -> TargetFile:
    """Random target angles, Uniform[0, 2 pi), deterministic per seed."""
    structure = build_structure(n, L)
    theta = init_theta(structure.param_count, seed)
    return TargetFile(n=n, L=L, theta_u=tuple(float(t) for t in theta), seed=int(seed))


@dataclass(frozen=True)
class BenchGrid:
    n: int
    L: int
    method: str = "ss1"
    sketch_dims: tuple[int, ...] = (16,)
    targets: int = 10
    trials: int = 24
    epochs: int = 3
    epoch_iters: int = 200
    seed: int = 0
    threads: int = 1
    time_limit: float = TRIAL_TIME_LIMIT

    def __post_init__(self):
        build_structure(self.n, self.L)
        if self.method not in ("ss1", "ss2"):
            raise ValueError(f"bench method must be ss1 or ss2, got {self.method!r}")
        if min(self.targets, self.trials, self.epochs, self.epoch_iters, self.threads) < 1:
            raise ValueError("targets, trials, epochs, epoch_iters and threads must be >= 1")
        if not self.sketch_dims:
            raise ValueError("need at least one sketch dimension")
        d = 2**self.n
        for m in self.sketch_dims:
            if not 1 <= m <= d:
                raise ValueError(f"sketch dimension {m} outside [1, {d}]")

    def target_seed(self, target_id: int) -> int:
        return derive_seed(self.seed, 0, target_id)

    def trial_seed(self, target_id: int, trial_id: int) -> int:
        # shared across m: every sketch dimension sees the same initial angles
        return derive_seed(self.seed, 1, target_id, trial_id)

    def tasks(self) -> list[tuple]:
        return [
            (m, t, k)
            for m in self.sketch_dims
            for t in range(self.targets)
            for k in range(self.trials)
        ]


def run_trial(grid: BenchGrid, m: int, target_id: int, trial_id: int) -> dict:
    """One grid cell. Errors are caught and recorded, never raised."""
    seed = grid.trial_seed(target_id, trial_id)
    row = {
        "n": grid.n, "L": grid.L, "m": m, "method": grid.method,
        "target_id": target_id, "trial_id": trial_id, "seed": seed, "epochs": grid.epochs,
        "final_sketched_objective": math.nan, "fidelity": math.nan,
        "success": False, "wall_time_s": 0.0, "status": "ok",
    }
    try:
        target = make_target(grid.n, grid.L, grid.target_seed(target_id))
        report = sketch_and_solve(
            target.structure,
            target.theta,
            EpochPlan(grid.method, m, grid.epochs, grid.epoch_iters),
            seed,
            time_limit=grid.time_limit,
        )
        row.update(
            final_sketched_objective=report.final_sketched_objective,
            fidelity=report.fidelity,
            success=report.success,
            wall_time_s=report.wall_time_s,
            status=report.status,
        )
    except Exception as exc:  # recorded per row; the grid keeps going
        logger.exception("trial m=%d target=%d trial=%d failed", m, target_id, trial_id)
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def _run_task(args) -> dict:
    grid, m, target_id, trial_id = args
    return run_trial(grid, m, target_id, trial_id)


def run_grid(grid: BenchGrid) -> list[dict]:
    """Runs every cell and returns rows sorted by ``(m, target_id, trial_id)``."""
    jobs = [(grid, *task) for task in grid.tasks()]
    if grid.threads == 1:
        rows = [_run_task(j) for j in jobs]
    else:
        with ProcessPoolExecutor(grid.threads) as pool:
            rows = list(pool.map(_run_task, jobs))
    return sorted(rows, key=lambda r: (r["m"], r["target_id"], r["trial_id"]))


def _std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def summarize(rows: list[dict], grid: BenchGrid | None = None) -> dict:
    """Per-m success statistics: per-target rates, their mean and sample std, wall-time mean and std."""
    by_m: dict[int, list[dict]] = {}
    for r in rows:
        by_m.setdefault(int(r["m"]), []).append(r)
    out = []
    for m in sorted(by_m):
        group = by_m[m]
        targets = sorted({int(r["target_id"]) for r in group})
        rates = [
            float(np.mean([bool(r["success"]) for r in group if int(r["target_id"]) == t]))
            for t in targets
        ]
        times = [float(r["wall_time_s"]) for r in group]
        n = int(group[0]["n"])
        entry = {
            "m": m,
            "sketch_ratio": m / 2**n,
            "trials": len(group),
            "successes": int(sum(bool(r["success"]) for r in group)),
            "target_ids": targets,
            "per_target_success_rate": rates,
            "success_rate_mean": float(np.mean(rates)),
            "success_rate_std": _std(rates),
            "wall_time_mean_s": float(np.mean(times)),
            "wall_time_std_s": _std(times),
        }
        failures = [
            {"target_id": r["target_id"], "trial_id": r["trial_id"], "status": r["status"]}
            for r in group
            if r.get("status", "ok") != "ok"
        ]
        entry["failures"] = failures
        out.append(entry)
    summary = {"version": "aqcsketch.bench_summary/1", "per_m": out}
    if grid is not None:
        summary["grid"] = asdict(grid)
    return summary
