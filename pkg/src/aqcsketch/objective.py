"""
Full and sketched compilation objectives, their analytic gradient, and the
Haar-averaged fidelity.

The sketched objective for sketch columns ``S`` is

    f(theta) = -(1/m) Re <V(theta) S, U S>,        U = V(theta_u),

with ``<A, B> = Tr(A^dagger B)``. With ``S = I`` it is the full objective
shifted by the constant 1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    ROTATION_AXIS,
    CircuitStructure,
    apply_ansatz,
    apply_gate,
    apply_pauli,
)
from .sketch import SketchKind, SketchOperator, full_sketch, random_unit_vectors

SUCCESS_FIDELITY = 0.999


@dataclass
class ObjectiveContext:
    """Target and sketch of one sketched problem.

    ``target_image`` caches ``U S`` since it does not depend on ``theta``.
    """

    structure: CircuitStructure
    theta_u: np.ndarray
    sketch: SketchOperator
    target_image: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.theta_u = self.structure.check_theta(self.theta_u)
        if self.sketch.d != self.structure.dim:
            raise ValueError(
                f"sketch has {self.sketch.d} rows, structure needs {self.structure.dim}"
            )
        self.target_image = apply_ansatz(
            self.structure, self.theta_u, self.sketch.columns.copy()
        )

    @classmethod
    def full(cls, structure: CircuitStructure, theta_u) -> "ObjectiveContext":
        return cls(structure, theta_u, full_sketch(structure.dim))

    @property
    def m(self) -> int:
        return self.sketch.m


def objective_sketched(ctx: ObjectiveContext, theta) -> float:
    """``-(1/m) Re <V(theta) S, U S>``; ``m`` forward ansatz passes."""
    vs = apply_ansatz(ctx.structure, theta, ctx.sketch.columns.copy())
    return -np.vdot(vs, ctx.target_image).real / ctx.m


def objective_full(ctx: ObjectiveContext, theta) -> float:
    """``1 - (1/d) Re <V(theta), U> = (1/2d) ||V(theta) - U||_F^2``."""
    if ctx.sketch.kind is not SketchKind.FULL:
        raise ValueError("objective_full needs a context built with the full sketch")
    return 1.0 + objective_sketched(ctx, theta)


def _sweep(structure: CircuitStructure, theta, columns, image, per_column: bool):
    """Forward/backward sweep for ``F = <V S, image>`` and its angle derivatives.

    With ``w_0 = S``, ``z_0 = V^dagger image`` and both advanced gate by gate,
    the derivative of ``F`` in the angle of rotation ``k`` is
    ``(i/2) <sigma_k w_k, z_k>``. Only the current ``w``, ``z`` are kept.
    Returns ``(Re F, d Re F / d theta)``, per column if ``per_column``.
    """
    theta = structure.check_theta(theta)
    w = columns.copy()
    z = apply_ansatz(structure, theta, image.copy(), adjoint=True)
    scratch = np.empty_like(w)
    shape = (structure.param_count, w.shape[1]) if per_column else structure.param_count
    grad = np.zeros(shape)

    for gate in structure.gates:
        slot = gate.param_slot
        angle = 0.0 if slot is None else theta[slot]
        apply_gate(gate, angle, w)
        apply_gate(gate, angle, z)
        if slot is not None:
            np.copyto(scratch, w)
            apply_pauli(ROTATION_AXIS[gate.kind], gate.qubits[0], scratch)
            if per_column:
                c = np.einsum("ij,ij->j", scratch.conj(), z)
            else:
                c = np.vdot(scratch, z)
            # Re[(i/2) c] = -Im(c) / 2
            grad[slot] = -0.5 * c.imag

    if per_column:
        value = np.einsum("ij,ij->j", w.conj(), image).real
    else:
        value = np.vdot(w, image).real
    return value, grad


def value_and_gradient(ctx: ObjectiveContext, theta) -> tuple[float, np.ndarray]:
    """Sketched objective and its gradient from one sweep.

    Cost is a constant number of ansatz passes over the ``d x m`` block,
    independent of the number of parameters.
    """
    value, grad = _sweep(ctx.structure, theta, ctx.sketch.columns, ctx.target_image, False)
    scale = -1.0 / ctx.m
    return value * scale, grad * scale


def column_gradients(structure: CircuitStructure, theta, theta_u, columns) -> np.ndarray:
    """Gradient of ``-Re <V x_k, U x_k>`` for every column ``x_k``, shape ``(p, K)``.

    The sketched gradient of any column subset is the mean of its columns here.
    """
    image = apply_ansatz(structure, theta_u, np.array(columns, dtype=complex))
    return -_sweep(structure, theta, np.asarray(columns, dtype=complex), image, True)[1]


def gradient_sketched(ctx: ObjectiveContext, theta) -> np.ndarray:
    return value_and_gradient(ctx, theta)[1]


def fidelity_from_trace(trace: complex, d: int) -> float:
    """Haar-averaged fidelity ``(1 + |<V, U>|^2 / d) / (d + 1)``."""
    return (1.0 + abs(trace) ** 2 / d) / (d + 1)


def trace_inner(
    structure: CircuitStructure,
    theta_v,
    theta_u,
    chunk: int = 256,
    workers: int = 1,
) -> complex:
    """``<V, U> = sum_j <V e_j, U e_j>`` over every basis column, in chunks."""
    d = structure.dim
    theta_v = structure.check_theta(theta_v)
    theta_u = structure.check_theta(theta_u)

    def block(start: int) -> complex:
        stop = min(start + chunk, d)
        e = np.zeros((d, stop - start), dtype=complex)
        e[np.arange(start, stop), np.arange(stop - start)] = 1.0
        vu = apply_ansatz(structure, theta_u, e.copy())
        vv = apply_ansatz(structure, theta_v, e)
        return np.vdot(vv, vu)

    starts = range(0, d, chunk)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    return complex(sum(parts))


def fidelity(structure: CircuitStructure, theta_v, theta_u, workers: int = 1) -> float:
    """Exact Haar-averaged fidelity of ``V(theta_v)`` against ``V(theta_u)``."""
    return fidelity_from_trace(trace_inner(structure, theta_v, theta_u, workers=workers), structure.dim)


def fidelity_estimate(
    structure: CircuitStructure, theta_v, theta_u, k: int, seed=None
) -> tuple[float, float]:
    """Monte-Carlo fidelity from ``k`` uniform unit columns.

    ``E[x x^dagger] = I/d`` makes ``d * mean_k <V x_k, U x_k>`` an unbiased
    estimate of ``<V, U>``. Returns ``(fidelity, standard_error)``, the error
    propagated to first order through the fidelity formula.
    """
    d = structure.dim
    x = random_unit_vectors(d, k, np.random.default_rng(seed))
    vx = apply_ansatz(structure, theta_v, x.copy())
    ux = apply_ansatz(structure, theta_u, x)
    samples = d * np.einsum("ij,ij->j", vx.conj(), ux)
    trace = samples.mean()
    se_trace = np.sqrt(samples.real.var(ddof=1) + samples.imag.var(ddof=1)) / np.sqrt(k) if k > 1 else np.inf
    value = min(max(fidelity_from_trace(trace, d), 0.0), 1.0)
    return value, 2 * abs(trace) / (d * (d + 1)) * se_trace


def is_success(fid: float, threshold: float = SUCCESS_FIDELITY) -> bool:
    return bool(fid >= threshold)
