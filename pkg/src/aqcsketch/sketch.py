"""
Random sketches: complex Gaussian blocks, normalized columns, the QR range
sketch of the current error matrix, and Haar unitaries for verification.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import CircuitStructure, apply_ansatz

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12
MAX_HAAR_DIM = 256


class SketchKind(str, enum.Enum):
    GAUSSIAN = "normalized_gaussian"
    ORTHONORMAL = "orthonormal"
    FULL = "full"


@dataclass(frozen=True)
class SketchOperator:
    """A ``d x m`` block of sketch columns.

    ``fallback`` is set when a QR sketch degenerated and the columns are an
    orthonormalized Gaussian instead of a basis of the error range.
    """

    kind: SketchKind
    columns: np.ndarray
    seed: Optional[int] = None
    fallback: bool = False

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def m(self) -> int:
        return self.columns.shape[1]


def full_sketch(d: int) -> SketchOperator:
    """The identity columns: sketching with this is the unsketched problem."""
    return SketchOperator(SketchKind.FULL, np.eye(d, dtype=complex))


def sample_gaussian(d: int, m: int, seed) -> np.ndarray:
    """``d x m`` matrix with real and imaginary parts i.i.d. N(0, 1)."""
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((d, m)) + 1j * rng.standard_normal((d, m))


def normalize_columns(omega: np.ndarray, seed=None) -> SketchOperator:
    """Scales every column of ``omega`` to unit norm.

    A zero column cannot be normalized; it is replaced by a fresh Gaussian
    column drawn from ``seed`` (probability-zero event, logged).
    """
    omega = np.array(omega, dtype=complex, copy=True)
    norms = np.linalg.norm(omega, axis=0)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        logger.warning("resampling %d zero sketch column(s)", bad.size)
        rng = np.random.default_rng(seed)
        for j in bad:
            while norms[j] == 0:
                col = rng.standard_normal(omega.shape[0]) + 1j * rng.standard_normal(omega.shape[0])
                omega[:, j] = col
                norms[j] = np.linalg.norm(col)
    return SketchOperator(SketchKind.GAUSSIAN, omega / norms, seed=seed)


def gaussian_sketch(d: int, m: int, seed) -> SketchOperator:
    return normalize_columns(sample_gaussian(d, m, seed), seed=seed)


def _orthonormalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # LAPACK geqrf/ungqr: Householder reflections on the tall block.
    return np.linalg.qr(a, mode="reduced")


def qr_sketch(
    structure: CircuitStructure,
    theta_0,
    theta_u,
    omega: np.ndarray,
    seed=None,
    rank_tol: float = RANK_TOL,
) -> SketchOperator:
    """Orthonormal basis of ``(V(theta_0)^dagger - U^dagger) omega``.

    ``B`` is formed column-wise with two adjoint ansatz passes, so no ``d x d``
    matrix is ever built. When ``B`` is numerically rank deficient (a diagonal
    entry of ``R`` below ``rank_tol``, typically because ``theta_0`` already
    reproduces ``U``) the Gaussian block itself is orthonormalized instead and
    the returned operator has ``fallback=True``.
    """
    omega = np.asarray(omega, dtype=complex)
    if omega.shape[0] != structure.dim:
        raise ValueError(f"sketch has {omega.shape[0]} rows, expected {structure.dim}")
    b = apply_ansatz(structure, theta_0, omega.copy(), adjoint=True)
    b -= apply_ansatz(structure, theta_u, omega.copy(), adjoint=True)
    q, r = _orthonormalize(b)
    pivots = np.abs(np.diag(r))
    if pivots.min() < rank_tol:
        logger.info("QR sketch rank deficient (min pivot %.3g); using Gaussian basis", pivots.min())
        q, _ = _orthonormalize(omega)
        return SketchOperator(SketchKind.ORTHONORMAL, q, seed=seed, fallback=True)
    return SketchOperator(SketchKind.ORTHONORMAL, q, seed=seed)


def haar_unitary(d: int, seed, size: Optional[int] = None) -> np.ndarray:
    """Haar-random unitary (or a stack of ``size`` of them).

    QR of a complex Gaussian, with each column of ``Q`` rescaled by the phase
    of the matching diagonal entry of ``R`` so the factorization is unique.
    """
    if d > MAX_HAAR_DIM:
        raise ValueError(f"dense Haar sampling limited to d <= {MAX_HAAR_DIM}")
    rng = np.random.default_rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[..., None, :]


def random_unit_vectors(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` columns uniform on the complex unit sphere in ``C^d``."""
    x = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    return x / np.linalg.norm(x, axis=0)
