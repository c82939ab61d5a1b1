"""
Dense ``d x d`` reference matrices built with explicit Kronecker products.

Verification only: nothing here shares code with the permutation engine, and
every builder refuses dimensions above ``MAX_DENSE_DIM``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .engine import CNOT, CircuitStructure

MAX_DENSE_DIM = 256

_I2 = np.eye(2, dtype=complex)
_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULIS = {"x": _X, "y": _Y, "z": _Z}


def _guard(n: int) -> None:
    if 2**n > MAX_DENSE_DIM:
        raise ValueError(f"dense matrices limited to d <= {MAX_DENSE_DIM}, got n={n}")


def kron_all(factors) -> np.ndarray:
    return reduce(np.kron, factors)


def embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """``I_{2^(q-1)} (x) op (x) I_{2^(n-q)}``."""
    _guard(n)
    return kron_all([op if q == qubit else _I2 for q in range(1, n + 1)])


def rotation(axis: str, angle: float) -> np.ndarray:
    # matrix exponential of -i angle sigma / 2, written via the Pauli identity
    sigma = _PAULIS[{"Rx": "x", "Ry": "y", "Rz": "z"}.get(axis, axis)]
    return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * sigma


def pauli(axis: str, qubit: int, n: int) -> np.ndarray:
    return embed(_PAULIS[axis], qubit, n)


def cnot(control: int, target: int, n: int) -> np.ndarray:
    """``|0><0|_c (x) I + |1><1|_c (x) X_t`` as a dense matrix."""
    _guard(n)
    off = kron_all([_P0 if q == control else _I2 for q in range(1, n + 1)])
    on = kron_all(
        [_P1 if q == control else _X if q == target else _I2 for q in range(1, n + 1)]
    )
    return off + on


def ansatz(structure: CircuitStructure, theta) -> np.ndarray:
    """Dense ``V(theta)``: product of every gate matrix in schedule order."""
    n = structure.n
    _guard(n)
    V = np.eye(2**n, dtype=complex)
    for gate in structure.gates:
        if gate.kind == CNOT:
            G = cnot(gate.qubits[0], gate.qubits[1], n)
        else:
            G = embed(rotation(gate.kind, theta[gate.param_slot]), gate.qubits[0], n)
        V = G @ V
    return V


def frobenius_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """``<A, B> = Tr(A^dagger B)``."""
    return complex(np.trace(A.conj().T @ B))
