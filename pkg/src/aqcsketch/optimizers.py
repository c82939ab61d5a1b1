"""
Stochastic gradient descent and the two sketch-and-solve drivers.

Every random draw of a run comes from a seed derived from one master seed, so
a :class:`RunReport` is reproducible bit for bit apart from its wall time.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .engine import CircuitStructure
from .io import dumps
from .lbfgs import LbfgsConfig, lbfgs
from .objective import (
    SUCCESS_FIDELITY,
    ObjectiveContext,
    fidelity,
    objective_sketched,
    value_and_gradient,
)
from .sketch import gaussian_sketch, normalize_columns, qr_sketch, sample_gaussian

REPORT_VERSION = "aqcsketch.run_report/1"
METHODS = ("sgd", "ss1", "ss2")


def derive_seed(master: int, *keys: int) -> int:
    """32-bit seed for the stream identified by ``keys`` under ``master``."""
    seq = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1)[0])


def init_theta(param_count: int, seed) -> np.ndarray:
    """Angles drawn i.i.d. from Uniform[0, 2 pi)."""
    return np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=param_count)


@dataclass(frozen=True)
class SgdConfig:
    batch_size: int = 8
    iterations: int = 1000
    eta0: float = 1.0
    schedule: str = "sqrt"  # eta_t = eta0 / sqrt(t + 1); "constant" keeps eta0
    seed: int = 0
    monitor_every: int = 10

    def __post_init__(self):
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("iterations and batch_size must be >= 1")
        if self.eta0 < 0:
            raise ValueError("eta0 must be non-negative")
        if self.schedule not in ("sqrt", "constant"):
            raise ValueError(f"unknown step schedule {self.schedule!r}")

    def step_size(self, t: int) -> float:
        return self.eta0 / np.sqrt(t + 1) if self.schedule == "sqrt" else self.eta0


@dataclass(frozen=True)
class EpochPlan:
    method: str = "ss1"
    m: int = 16
    epochs: int = 3
    epoch_iters: int = 200

    def __post_init__(self):
        if self.method not in ("ss1", "ss2"):
            raise ValueError(f"sketch-and-solve method must be ss1 or ss2, got {self.method!r}")
        if self.epochs < 1 or self.epoch_iters < 1 or self.m < 1:
            raise ValueError("epochs, epoch_iters and m must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    sketch_seed: int
    iterations: int
    n_evals: int
    status: str
    initial_objective: float
    final_objective: float
    line_search_failures: int = 0
    fallback: bool = False
    trace: list[float] = field(default_factory=list)


@dataclass
class RunReport:
    """Provenance and outcome of one optimization trial."""

    method: str
    n: int
    L: int
    m: int
    seeds: dict
    config: dict
    epochs: list[EpochRecord]
    theta: list[float]
    fidelity: float
    success: bool
    status: str = "ok"
    wall_time_s: float = 0.0
    monitor: list[tuple[int, float]] = field(default_factory=list)
    version: str = REPORT_VERSION

    @property
    def final_sketched_objective(self) -> float:
        if self.monitor:
            return self.monitor[-1][1]
        return self.epochs[-1].final_objective if self.epochs else float("nan")

    @property
    def fallback(self) -> bool:
        return any(e.fallback for e in self.epochs)

    def to_dict(self, include_time: bool = True) -> dict:
        out = asdict(self)
        out["final_sketched_objective"] = self.final_sketched_objective
        out["monitor"] = [list(p) for p in self.monitor]
        if not include_time:
            out.pop("wall_time_s")
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        data = dict(data)
        data.pop("final_sketched_objective", None)
        data["epochs"] = [EpochRecord(**e) for e in data["epochs"]]
        data["monitor"] = [tuple(p) for p in data.get("monitor", [])]
        return cls(**data)


def _finish(report: RunReport, structure, theta, theta_u, start: float) -> RunReport:
    report.theta = [float(t) for t in theta]
    report.fidelity = fidelity(structure, theta, theta_u)
    report.success = report.fidelity >= SUCCESS_FIDELITY
    report.wall_time_s = time.perf_counter() - start
    return report


def sgd(
    structure: CircuitStructure,
    theta_u,
    config: SgdConfig = SgdConfig(),
    theta_0=None,
) -> tuple[np.ndarray, RunReport]:
    """Mini-batch SGD on the stochastic objective.

    Each iteration draws a fresh Gaussian block, normalizes its columns and
    steps against the sketched gradient. Progress is monitored on a separate
    fixed sketch every ``config.monitor_every`` iterations (and at the end).
    """
    start = time.perf_counter()
    d, m = structure.dim, config.batch_size
    seeds = {
        "master": config.seed,
        "init": derive_seed(config.seed, 0),
        "sketch": [derive_seed(config.seed, 1)],
        "monitor": derive_seed(config.seed, 2),
    }
    theta = (
        init_theta(structure.param_count, seeds["init"])
        if theta_0 is None
        else structure.check_theta(theta_0).copy()
    )
    stream = np.random.default_rng(seeds["sketch"][0])
    monitor_ctx = ObjectiveContext(structure, theta_u, gaussian_sketch(d, m, seeds["monitor"]))
    monitor = [(0, objective_sketched(monitor_ctx, theta))]

    for t in range(config.iterations):
        omega = sample_gaussian(d, m, stream)
        ctx = ObjectiveContext(structure, theta_u, normalize_columns(omega))
        _, g = value_and_gradient(ctx, theta)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite stochastic gradient at iteration {t} "
                f"(|theta|={np.linalg.norm(theta):.3g})"
            )
        theta = theta - config.step_size(t) * g
        done = t + 1
        if done % config.monitor_every == 0 or done == config.iterations:
            monitor.append((done, objective_sketched(monitor_ctx, theta)))

    report = RunReport(
        method="sgd",
        n=structure.n,
        L=structure.L,
        m=m,
        seeds=seeds,
        config=asdict(config),
        epochs=[],
        theta=[],
        fidelity=float("nan"),
        success=False,
        monitor=monitor,
    )
    return theta, _finish(report, structure, theta, theta_u, start)


def sketch_and_solve(
    structure: CircuitStructure,
    theta_u,
    plan: EpochPlan,
    seed: int,
    lbfgs_config: Optional[LbfgsConfig] = None,
    theta_0=None,
    time_limit: Optional[float] = None,
) -> RunReport:
    """Runs S&S-1 or S&S-2 for ``plan.epochs`` epochs.

    S&S-1 sketches with fresh normalized Gaussian columns each epoch; S&S-2
    with an orthonormal basis of the current error matrix applied to a fresh
    Gaussian block. Each epoch runs at most ``plan.epoch_iters`` L-BFGS
    iterations from the previous epoch's angles.

    Args:
        structure: ansatz schedule.
        theta_u: angles of the target circuit.
        plan: method, sketch dimension and epoch budget.
        seed: master seed of the trial.
        lbfgs_config: tolerances; ``max_iter`` is replaced by ``plan.epoch_iters``.
        theta_0: starting angles; drawn from the init seed when omitted.
        time_limit: wall-clock cap in seconds; on expiry the run stops with
            status ``"timeout"``.
    """
    start = time.perf_counter()
    theta_u = structure.check_theta(theta_u)
    base = lbfgs_config or LbfgsConfig()
    cfg = LbfgsConfig(**{**asdict(base), "max_iter": plan.epoch_iters})
    d = structure.dim
    seeds = {
        "master": int(seed),
        "init": derive_seed(seed, 0),
        "sketch": [derive_seed(seed, 1, e) for e in range(plan.epochs)],
    }
    theta = (
        init_theta(structure.param_count, seeds["init"])
        if theta_0 is None
        else structure.check_theta(theta_0).copy()
    )
    deadline = None if time_limit is None else time.monotonic() + time_limit
    stop = None if deadline is None else (lambda k, x, f: time.monotonic() > deadline)

    records = []
    status = "ok"
    for epoch, sketch_seed in enumerate(seeds["sketch"]):
        omega = sample_gaussian(d, plan.m, sketch_seed)
        if plan.method == "ss1":
            sketch = normalize_columns(omega, seed=sketch_seed)
        else:
            sketch = qr_sketch(structure, theta, theta_u, omega, seed=sketch_seed)
        ctx = ObjectiveContext(structure, theta_u, sketch)
        result = lbfgs(lambda th: value_and_gradient(ctx, th), theta, cfg, callback=stop)
        theta = result.x
        records.append(
            EpochRecord(
                epoch=epoch,
                sketch_seed=sketch_seed,
                iterations=result.iterations,
                n_evals=result.n_evals,
                status=result.status,
                initial_objective=result.trace[0],
                final_objective=result.f,
                line_search_failures=result.ls_failures,
                fallback=sketch.fallback,
                trace=result.trace,
            )
        )
        if result.status == "stopped":
            status = "timeout"
            break

    report = RunReport(
        method=plan.method,
        n=structure.n,
        L=structure.L,
        m=plan.m,
        seeds=seeds,
        config={"plan": asdict(plan), "lbfgs": asdict(cfg), "time_limit": time_limit},
        epochs=records,
        theta=[],
        fidelity=float("nan"),
        success=False,
        status=status,
    )
    return _finish(report, structure, theta, theta_u, start)


def sketch_and_solve_1(structure, theta_u, m, epochs=3, seed=0, lbfgs_config=None, epoch_iters=200, **kw) -> RunReport:
    """S&S-1: fixed normalized Gaussian sketch per epoch."""
    return sketch_and_solve(
        structure, theta_u, EpochPlan("ss1", m, epochs, epoch_iters), seed, lbfgs_config, **kw
    )


def sketch_and_solve_2(structure, theta_u, m, epochs=3, T=200, seed=0, lbfgs_config=None, **kw) -> RunReport:
    """S&S-2: QR range sketch of the error matrix, restarted every ``T`` iterations."""
    return sketch_and_solve(
        structure, theta_u, EpochPlan("ss2", m, epochs, T), seed, lbfgs_config, **kw
    )
