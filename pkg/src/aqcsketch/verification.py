"""
Seeded numerical checks of the variance, concentration and construction
results behind the sketched objective, plus oracle checks of the engine.

Every Monte-Carlo check compares against its bound or target with a slack of
three standard errors; the exact checks use fixed tolerances.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dense
from . import objective as obj
from .engine import apply_ansatz, build_structure
from .sketch import SketchOperator, SketchKind, gaussian_sketch, haar_unitary, random_unit_vectors

N_SE = 3.0


@dataclass
class StatCheckReport:
    """Outcome of one check.

    ``kind`` is ``"bound"`` (pass iff empirical <= target + slack) or
    ``"target"`` (pass iff |empirical - target| <= slack), where slack is
    ``N_SE`` standard errors or ``tolerance`` for exact checks.
    """

    name: str
    samples: int
    empirical: float
    target: float
    stderr: float
    passed: bool
    seed: Optional[int]
    kind: str = "bound"
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"[{flag}] {self.name}: empirical={self.empirical:.6g} {self.kind}={self.target:.6g} "
            f"se={self.stderr:.3g} n={self.samples}"
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _bound_report(name, values, bound, seed, **details) -> StatCheckReport:
    """Checks ``mean(values) <= bound`` with ``N_SE`` standard errors of slack."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return StatCheckReport(
        name, values.size, mean, float(bound), se, mean <= bound + N_SE * se + 1e-12, seed,
        details=details,
    )


def _variance_with_se(y: np.ndarray) -> tuple[float, float]:
    dev2 = (y - y.mean()) ** 2
    return float(y.var(ddof=1)), float(dev2.std(ddof=1) / np.sqrt(y.size))


def ratio_variance_bound(a) -> float:
    a = np.asarray(a, dtype=float)
    n = a.size
    return 4 * (n - 1) / (n**2 * (n + 2)) * float(np.sum(a**2))


def unit_batch_variance_bound(d: int) -> float:
    return 4 * (d - 1) / (d * (d + 2))


def gradient_noise_bound(d: int, p: int, m: int) -> float:
    return (d - 1) * p / (m * d * (d + 2))


def check_lemma_ratio_variance(a, samples: int = 100_000, seed: int = 0) -> StatCheckReport:
    """Variance of ``Y(a) = sum a_i x_i^2 / sum x_i^2`` for standard-normal ``x``.

    Passes when the empirical variance respects ``4(n-1)/(n^2(n+2)) sum a_i^2``
    and the empirical mean matches ``sum(a)/n``, each within 3 SE.
    """
    a = np.asarray(a, dtype=float)
    rng = np.random.default_rng(seed)
    x2 = rng.standard_normal((samples, a.size)) ** 2
    y = (x2 @ a) / x2.sum(axis=1)
    var, var_se = _variance_with_se(y)
    bound = ratio_variance_bound(a)
    mean_target = a.sum() / a.size
    mean_se = float(y.std(ddof=1) / np.sqrt(samples))
    mean_ok = abs(y.mean() - mean_target) <= N_SE * mean_se + 1e-12
    var_ok = var <= bound + N_SE * var_se + 1e-12
    return StatCheckReport(
        "ratio_variance", samples, var, bound, var_se, bool(var_ok and mean_ok), seed,
        details={"mean": float(y.mean()), "mean_target": float(mean_target), "mean_se": mean_se},
    )


def check_unit_batch_variance(
    structure, theta_v, theta_u, samples: int = 100_000, seed: int = 0, chunk: int = 8192
) -> StatCheckReport:
    """Variance of ``Re <V x, U x>`` over uniform unit ``x`` against ``4(d-1)/(d(d+2))``."""
    d = structure.dim
    rng = np.random.default_rng(seed)
    values = []
    for start in range(0, samples, chunk):
        x = random_unit_vectors(d, min(chunk, samples - start), rng)
        ux = apply_ansatz(structure, theta_u, x.copy())
        vx = apply_ansatz(structure, theta_v, x)
        values.append(np.einsum("ij,ij->j", vx.conj(), ux).real)
    y = np.concatenate(values)
    var, var_se = _variance_with_se(y)
    bound = unit_batch_variance_bound(d)
    return StatCheckReport(
        "unit_batch_variance", samples, var, bound, var_se, var <= bound + N_SE * var_se + 1e-12, seed,
    )


def gradient_noise_samples(
    structure, theta, theta_u, m: int, samples: int, seed: int, chunk_columns: int = 1024
) -> np.ndarray:
    """``||g_sketch - g_full||^2`` for ``samples`` independent ``m``-column sketches.

    Sketches are normalized Gaussian blocks; per-column gradients are computed
    in large batches and averaged in groups of ``m``.
    """
    d = structure.dim
    g_full = obj.gradient_sketched(obj.ObjectiveContext.full(structure, theta_u), theta)
    rng = np.random.default_rng(seed)
    per_chunk = max(1, chunk_columns // m)
    out = []
    for start in range(0, samples, per_chunk):
        k = min(per_chunk, samples - start)
        x = random_unit_vectors(d, k * m, rng)
        cols = obj.column_gradients(structure, theta, theta_u, x)
        g = cols.reshape(cols.shape[0], k, m).mean(axis=2)
        out.append(np.sum((g - g_full[:, None]) ** 2, axis=0))
    return np.concatenate(out)


def check_gradient_noise(
    structure, theta, theta_u, m: int, samples: int = 10_000, seed: int = 0, full_basis: bool = False
) -> StatCheckReport:
    """Mean squared sketched-gradient error against ``(d-1)(3n+4L)/(m d (d+2))``.

    With ``full_basis`` the sketch is the ``d`` identity columns, for which the
    error is exactly zero.
    """
    d, p = structure.dim, structure.param_count
    if full_basis:
        g_full = obj.gradient_sketched(obj.ObjectiveContext.full(structure, theta_u), theta)
        g = obj.column_gradients(structure, theta, theta_u, np.eye(d, dtype=complex)).mean(axis=1)
        err = float(np.sum((g - g_full) ** 2))
        return _bound_report("gradient_noise", [err, err], gradient_noise_bound(d, p, d), seed, m=d)
    errs = gradient_noise_samples(structure, theta, theta_u, m, samples, seed)
    return _bound_report("gradient_noise", errs, gradient_noise_bound(d, p, m), seed, m=m)


def check_gradient_noise_scaling(
    structure, theta, theta_u, m: int, samples: int = 10_000, seed: int = 0, rel_tol: float = 0.2
) -> StatCheckReport:
    """Doubling ``m`` should halve the mean squared gradient error (within ``rel_tol``)."""
    e1 = gradient_noise_samples(structure, theta, theta_u, m, samples, seed).mean()
    e2 = gradient_noise_samples(structure, theta, theta_u, 2 * m, samples, seed + 1).mean()
    ratio = float(e2 / e1)
    return StatCheckReport(
        "gradient_noise_scaling", samples, ratio, 0.5, 0.0, abs(ratio - 0.5) <= rel_tol * 0.5, seed,
        kind="target", tolerance=rel_tol * 0.5, details={"m": m, "err_m": float(e1), "err_2m": float(e2)},
    )


def check_haar_concentration(
    d: int, samples: int = 20_000, seed: int = 0, ts=(2.0, 4.0, 8.0), chunk: int = 1000
) -> StatCheckReport:
    """``E|<V, U>|^2 = 1`` and ``P(|<V, U>| > t) <= 1/t^2`` for Haar ``V`` and fixed ``U``."""
    ss = np.random.SeedSequence(seed)
    u_seed, v_seed = ss.spawn(2)
    U = haar_unitary(d, u_seed)
    v_rng = np.random.default_rng(v_seed)
    overlaps = []
    for start in range(0, samples, chunk):
        V = haar_unitary(d, v_rng, size=min(chunk, samples - start))
        overlaps.append(np.einsum("kij,ij->k", V.conj(), U))
    t = np.abs(np.concatenate(overlaps))
    sq = t**2
    mean = float(sq.mean())
    se = float(sq.std(ddof=1) / np.sqrt(samples))
    mean_ok = abs(mean - 1.0) <= N_SE * se + 1e-12
    tails = {}
    tails_ok = True
    for level in ts:
        p_hat = float(np.mean(t > level))
        p_se = np.sqrt(max(p_hat * (1 - p_hat), 1.0 / samples) / samples)
        tails[str(level)] = p_hat
        tails_ok &= p_hat <= 1.0 / level**2 + N_SE * p_se
    return StatCheckReport(
        "haar_concentration", samples, mean, 1.0, se, bool(mean_ok and tails_ok), seed,
        kind="target", tolerance=N_SE * se, details={"tails": tails},
    )


def adversarial_unitary(U: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """``V' = U (Q1 Q1^dagger - Q2 Q2^dagger)`` from the full QR of ``xs``.

    ``V'`` is unitary, agrees with ``U`` on every column of ``xs`` and has
    ``<V', U> = 2m - d``: the sketched and full objectives differ by
    ``2(d - m)/d`` there.
    """
    U = np.asarray(U, dtype=complex)
    xs = np.asarray(xs, dtype=complex)
    d, m = xs.shape
    if U.shape != (d, d):
        raise ValueError("U must be d x d with d the column length of xs")
    if d > dense.MAX_DENSE_DIM:
        raise ValueError(f"dense construction limited to d <= {dense.MAX_DENSE_DIM}")
    q, r = np.linalg.qr(xs, mode="complete")
    if np.abs(np.diag(r[:m])).min() < 1e-12 * max(1.0, np.abs(r).max()):
        raise ValueError("columns are linearly dependent")
    q1, q2 = q[:, :m], q[:, m:]
    return U @ (q1 @ q1.conj().T - q2 @ q2.conj().T)


def adversarial_errors(U: np.ndarray, xs: np.ndarray) -> dict:
    V = adversarial_unitary(U, xs)
    d, m = xs.shape
    per_col = np.einsum("ij,ij->j", (V @ xs).conj(), U @ xs)
    return {
        "unitarity": float(np.abs(V.conj().T @ V - np.eye(d)).max()),
        "columns": float(np.abs(per_col - 1).max()),
        "trace": float(abs(dense.frobenius_inner(V, U) - (2 * m - d))),
    }


# ---------------------------------------------------------------------------
# Exact (oracle) checks


def _max_report(name, errors, tol, seed, **details) -> StatCheckReport:
    worst = float(max(errors))
    return StatCheckReport(
        name, len(errors), worst, tol, 0.0, worst <= tol, seed, kind="bound", tolerance=tol, details=details
    )


def check_engine_oracle(seed: int = 0, ns=range(2, 7), instances: int = 20, tol: float = 1e-10):
    """Engine ``V(theta) x`` against the dense Kronecker product, ``L = 2n``."""
    rng = np.random.default_rng(seed)
    errors = []
    for n in ns:
        s = build_structure(n, 2 * n)
        for _ in range(instances):
            theta = rng.uniform(0, 2 * np.pi, s.param_count)
            x = rng.standard_normal(s.dim) + 1j * rng.standard_normal(s.dim)
            got = apply_ansatz(s, theta, x.copy())
            errors.append(np.abs(got - dense.ansatz(s, theta) @ x).max())
    return _max_report("engine_oracle", errors, tol, seed)


def finite_difference(fun: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``fun`` at ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def check_gradient_fd(seed: int = 0, instances: int = 50, max_n: int = 6, max_m: int = 8, tol: float = 1e-6):
    """Analytic sketched gradient against central differences, componentwise relative error."""
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        L = int(rng.integers(0, 2 * n + 1))
        m = int(rng.integers(1, min(max_m, 2**n) + 1))
        s = build_structure(n, L)
        theta = rng.uniform(0, 2 * np.pi, s.param_count)
        theta_u = rng.uniform(0, 2 * np.pi, s.param_count)
        ctx = obj.ObjectiveContext(s, theta_u, gaussian_sketch(s.dim, m, int(rng.integers(2**31))))
        g = obj.gradient_sketched(ctx, theta)
        fd = finite_difference(lambda t: obj.objective_sketched(ctx, t), theta)
        errors.append(float(np.max(np.abs(g - fd) / np.abs(fd))))
    return _max_report("gradient_fd", errors, tol, seed)


def check_projection_identity(seed: int = 0, instances: int = 20, max_n: int = 5, max_m: int = 8, tol: float = 1e-9):
    """``(1/2m)||(V-U)QQ^dagger||_F^2 = 1 - (1/m) Re <VQ, UQ>`` on dense matrices.

    The right-hand side is evaluated by the engine through the sketched
    objective with an orthonormal sketch; the left-hand side densely.
    """
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        L = int(rng.integers(0, 2 * n + 1))
        m = int(rng.integers(1, min(max_m, 2**n) + 1))
        s = build_structure(n, L)
        theta = rng.uniform(0, 2 * np.pi, s.param_count)
        theta_u = rng.uniform(0, 2 * np.pi, s.param_count)
        g = rng.standard_normal((s.dim, m)) + 1j * rng.standard_normal((s.dim, m))
        q, _ = np.linalg.qr(g)
        V, U = dense.ansatz(s, theta), dense.ansatz(s, theta_u)
        lhs = np.linalg.norm((V - U) @ q @ q.conj().T, "fro") ** 2 / (2 * m)
        ctx = obj.ObjectiveContext(s, theta_u, SketchOperator(SketchKind.ORTHONORMAL, q))
        rhs = 1.0 + obj.objective_sketched(ctx, theta)
        errors.append(abs(lhs - rhs))
    return _max_report("projection_identity", errors, tol, seed)


def check_adversarial(seed: int = 0, instances: int = 10, max_d: int = 64):
    """Exact construction: per-column overlaps 1 (1e-9), ``<V', U> = 2m - d`` (1e-8)."""
    rng = np.random.default_rng(seed)
    col_err, tr_err, uni_err = [], [], []
    for i in range(instances):
        d = int(2 ** rng.integers(1, int(np.log2(max_d)) + 1))
        m = int(rng.integers(1, d // 2 + 1))
        U = haar_unitary(d, rng)
        xs = random_unit_vectors(d, m, rng)
        e = adversarial_errors(U, xs)
        col_err.append(e["columns"])
        tr_err.append(e["trace"])
        uni_err.append(e["unitarity"])
    passed = max(col_err) <= 1e-9 and max(tr_err) <= 1e-8 and max(uni_err) <= 1e-10
    return StatCheckReport(
        "adversarial_unitary", instances, float(max(col_err)), 1e-9, 0.0, passed, seed,
        tolerance=1e-9,
        details={"trace_error": float(max(tr_err)), "unitarity_error": float(max(uni_err))},
    )


def statistical_checks(seed: int = 0) -> list[StatCheckReport]:
    """Full Monte-Carlo suite at the sample sizes used for acceptance."""
    rng = np.random.default_rng(seed)
    reports = [
        check_lemma_ratio_variance(np.ones(8), 10_000, seed),
        check_lemma_ratio_variance(np.eye(4)[0], 100_000, seed + 1),
        check_lemma_ratio_variance(rng.uniform(-1, 1, 16), 100_000, seed + 2),
    ]
    for n, samples in ((4, 100_000), (6, 100_000)):
        s = build_structure(n, 2 * n)
        tv = rng.uniform(0, 2 * np.pi, s.param_count)
        tu = rng.uniform(0, 2 * np.pi, s.param_count)
        reports.append(check_unit_batch_variance(s, tv, tu, samples, seed + 10 + n))
    for n, L, m, samples in ((4, 4, 4, 10_000), (6, 6, 8, 10_000), (8, 8, 16, 10_000)):
        s = build_structure(n, L)
        th = rng.uniform(0, 2 * np.pi, s.param_count)
        tu = rng.uniform(0, 2 * np.pi, s.param_count)
        reports.append(check_gradient_noise(s, th, tu, m, samples, seed + 20 + n))
    s = build_structure(4, 4)
    th = rng.uniform(0, 2 * np.pi, s.param_count)
    tu = rng.uniform(0, 2 * np.pi, s.param_count)
    reports.append(check_gradient_noise_scaling(s, th, tu, 4, 10_000, seed + 30))
    reports.append(check_haar_concentration(1, 1_000, seed + 40))
    reports.append(check_haar_concentration(64, 20_000, seed + 41))
    return reports


def fast_checks(seed: int = 0) -> list[StatCheckReport]:
    return [
        check_engine_oracle(seed),
        check_gradient_fd(seed),
        check_projection_identity(seed),
        check_adversarial(seed),
    ]


def run_verification(level: str = "fast", seed: int = 0) -> list[StatCheckReport]:
    if level not in ("fast", "full"):
        raise ValueError(f"unknown verification level {level!r}")
    reports = fast_checks(seed)
    if level == "full":
        reports += statistical_checks(seed)
    return reports
