"""
Matrix-free application of the spin-ansatz gates to batches of statevectors.

Qubit 1 is the most significant bit of a basis index, so a single-qubit gate
``v`` on qubit ``q`` acts as ``I_{2^(q-1)} (x) v (x) I_{2^(n-q)}``. Every gate is
applied without building a ``d x d`` matrix: rotations view the state so that
the amplitude pairs differing only in qubit ``q`` line up and multiply them by
a 2x2 block, CNOTs are a pure index permutation from a cached
:class:`PermutationPlan`. Batches are arrays of shape
``(d,)`` or ``(d, m)``, one statevector per column, and are mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

ROTATIONS = ("Rx", "Ry", "Rz")
CNOT = "CNOT"

# Pauli generator of each rotation: d/dt R(t) = -(i/2) sigma R(t).
ROTATION_AXIS = {"Rx": "x", "Ry": "y", "Rz": "z"}

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_QUBITS = 24


@dataclass(frozen=True)
class GateSpec:
    """One gate of the schedule.

    ``qubits`` holds one 1-based qubit for rotations and ``(control, target)``
    for a CNOT. ``param_slot`` is ``None`` for CNOTs.
    """

    kind: str
    qubits: tuple[int, ...]
    param_slot: Optional[int] = None

    @property
    def is_rotation(self) -> bool:
        return self.kind != CNOT


@dataclass(frozen=True)
class CircuitStructure:
    """Gate schedule of the spin ansatz for ``n`` qubits and ``L`` CNOT units."""

    n: int
    L: int
    gates: tuple[GateSpec, ...]

    @property
    def param_count(self) -> int:
        return 3 * self.n + 4 * self.L

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def cnot_pairs(self) -> list[tuple[int, int]]:
        return [g.qubits for g in self.gates if g.kind == CNOT]

    def check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param_count,):
            raise ValueError(
                f"expected {self.param_count} parameters for n={self.n}, L={self.L}, "
                f"got shape {theta.shape}"
            )
        return theta


@dataclass(frozen=True)
class PermutationPlan:
    """Index permutation realizing a CNOT placement.

    ``perm[i]`` is the source position of the amplitude that lands at position
    ``i``; ``inverse`` undoes it.
    """

    perm: np.ndarray
    inverse: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def cnot_plan(n: int, control: int, target: int) -> PermutationPlan:
    """The CNOT itself as a permutation of basis indices.

    Moving ``control``/``target`` to the last two places, swapping rows 3 and 4
    of the ``(4, d/4)`` view and moving them back composes to flipping the
    target bit of every index whose control bit is set.
    """
    _check_qubit(n, control)
    _check_qubit(n, target)
    if control == target:
        raise ValueError("CNOT control and target must differ")
    cbit, tbit = n - control, n - target
    idx = np.arange(2**n, dtype=np.intp)
    perm = idx ^ (((idx >> cbit) & 1) << tbit)
    inverse = np.empty_like(perm)
    inverse[perm] = idx
    return PermutationPlan(_frozen(perm), _frozen(inverse))


def _check_qubit(n: int, qubit: int) -> None:
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit index {qubit} outside [1, {n}]")


def num_qubits(batch: np.ndarray) -> int:
    d = batch.shape[0]
    n = d.bit_length() - 1
    if d < 2 or 2**n != d:
        raise ValueError(f"leading dimension {d} is not a power of two >= 2")
    return n


def build_structure(n: int, L: int, max_qubits: int = MAX_QUBITS) -> CircuitStructure:
    """Builds the spin-ansatz schedule.

    Initial layer: Rz, Ry, Rz on every qubit in ascending order. CNOT units are
    then placed on the line by alternating layer A (pairs ``(q, q+1)`` with odd
    ``q``) and layer B (even ``q``) until ``L`` units are emitted. Each unit is
    ``CNOT(q, q+1)`` followed by Ry, Rz on the control and Ry, Rx on the target.

    Args:
        n: number of qubits, ``2 <= n <= max_qubits``.
        L: number of CNOT units, ``L >= 0``.
        max_qubits: memory guard.

    Returns:
        the structure; identical for identical ``(n, L)``.
    """
    if n < 2:
        raise ValueError("the line topology needs at least 2 qubits")
    if n > max_qubits:
        raise ValueError(f"n={n} exceeds the memory guard of {max_qubits} qubits")
    if L < 0:
        raise ValueError("L must be non-negative")

    gates: list[GateSpec] = []
    slot = 0

    def rot(kind: str, q: int) -> None:
        nonlocal slot
        gates.append(GateSpec(kind, (q,), slot))
        slot += 1

    for q in range(1, n + 1):
        rot("Rz", q)
        rot("Ry", q)
        rot("Rz", q)

    layer_a = [(q, q + 1) for q in range(1, n, 2)]
    layer_b = [(q, q + 1) for q in range(2, n, 2)]
    pairs: list[tuple[int, int]] = []
    while len(pairs) < L:
        pairs.extend(layer_a)
        pairs.extend(layer_b)
    for ctrl, tgt in pairs[:L]:
        gates.append(GateSpec(CNOT, (ctrl, tgt)))
        rot("Ry", ctrl)
        rot("Rz", ctrl)
        rot("Ry", tgt)
        rot("Rx", tgt)

    return CircuitStructure(n=n, L=L, gates=tuple(gates))


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of ``exp(-i angle sigma / 2)`` for axis in {Rx, Ry, Rz} or {x, y, z}."""
    axis = ROTATION_AXIS.get(axis, axis)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise ValueError(f"unknown rotation axis {axis!r}")


def _pair_view(qubit: int, batch: np.ndarray) -> np.ndarray:
    """``(2^(q-1), 2, rest)`` view of ``batch``; axis 1 is the bit of ``qubit``.

    This is the qubit-to-front permutation done with strides instead of an
    index array, so nothing is copied.
    """
    n = num_qubits(batch)
    _check_qubit(n, qubit)
    if not batch.flags.c_contiguous:
        raise ValueError("batch must be C-contiguous for in-place gate application")
    return batch.reshape(2 ** (qubit - 1), 2, -1)


def apply_single(matrix: np.ndarray, qubit: int, batch: np.ndarray) -> np.ndarray:
    """Applies an arbitrary 2x2 matrix on ``qubit`` in place."""
    view = _pair_view(qubit, batch)
    view[...] = np.matmul(matrix, view)
    return batch


def apply_rotation(axis: str, angle: float, qubit: int, batch: np.ndarray) -> np.ndarray:
    """Applies ``R_axis(angle)`` on ``qubit`` to every column of ``batch`` in place.

    Conventions: ``Rz(t) = diag(e^{-it/2}, e^{it/2})``,
    ``Ry(t) = [[cos, -sin], [sin, cos]](t/2)``,
    ``Rx(t) = [[cos, -i sin], [-i sin, cos]](t/2)``.
    """
    axis = ROTATION_AXIS.get(axis, axis)
    if axis == "z":
        view = _pair_view(qubit, batch)
        phase = np.exp(-0.5j * angle)
        view[:, 0] *= phase
        view[:, 1] *= phase.conjugate()
        return batch
    return apply_single(rotation_matrix(axis, angle), qubit, batch)


def apply_cnot(control: int, target: int, batch: np.ndarray) -> np.ndarray:
    """Applies CNOT(control -> target) in place; no arithmetic, only a gather."""
    plan = cnot_plan(num_qubits(batch), control, target)
    batch[...] = batch[plan.perm]
    return batch


def apply_pauli(axis: str, qubit: int, batch: np.ndarray) -> np.ndarray:
    """Applies the Pauli ``sigma_axis`` on ``qubit`` in place."""
    if axis == "z":
        _pair_view(qubit, batch)[:, 1] *= -1
        return batch
    if axis not in PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return apply_single(PAULI[axis], qubit, batch)


def apply_gate(gate: GateSpec, angle: float, batch: np.ndarray, adjoint: bool = False) -> np.ndarray:
    if gate.kind == CNOT:
        return apply_cnot(gate.qubits[0], gate.qubits[1], batch)
    return apply_rotation(gate.kind, -angle if adjoint else angle, gate.qubits[0], batch)


def apply_ansatz(
    structure: CircuitStructure,
    theta: Sequence[float],
    batch: np.ndarray,
    adjoint: bool = False,
) -> np.ndarray:
    """Computes ``V(theta) @ batch`` (or ``V(theta)^dagger @ batch``) in place.

    Args:
        structure: gate schedule.
        theta: rotation angles, one per parameter slot.
        batch: array of shape ``(d,)`` or ``(d, m)`` with ``d = 2**structure.n``.
        adjoint: apply the conjugate-transposed gates in reverse order.

    Returns:
        ``batch``, overwritten with the result.
    """
    theta = structure.check_theta(theta)
    if batch.shape[0] != structure.dim:
        raise ValueError(f"batch has {batch.shape[0]} rows, expected {structure.dim}")
    gates = reversed(structure.gates) if adjoint else structure.gates
    for gate in gates:
        angle = 0.0 if gate.param_slot is None else theta[gate.param_slot]
        apply_gate(gate, angle, batch, adjoint)
    return batch


def basis_state(n: int, index: int = 0) -> np.ndarray:
    x = np.zeros(2**n, dtype=complex)
    x[index] = 1.0
    return x
