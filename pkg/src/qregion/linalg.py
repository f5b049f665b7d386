"""Dense Hermitian linear algebra on ``d x d`` complex operators.

Operators are plain :class:`numpy.ndarray` objects.  The functions here add
the checks the rest of the package relies on (Hermiticity, positivity) and a
Gram-matrix pseudo-inverse that reports its rank and range projector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import DEFAULT, default_rel_tol


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


def as_operator(a, tol: float = DEFAULT.herm) -> np.ndarray:
    """Return ``a`` as a complex square array, raising if it is not Hermitian."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    err = hermiticity_error(a)
    if err > tol:
        raise NotHermitianError(f"operator is not Hermitian (|A - A^H| = {err:.3g})")
    return a


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - np.swapaxes(a, -1, -2).conj())))


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt product ``Tr[a b]`` of two Hermitian operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # Tr[a b] = sum_ij a_ij b_ji
    return float(np.real(np.sum(a * b.T)))


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(a, tol: float = DEFAULT.herm) -> SpectralDecomposition:
    """Eigen-decomposition with eigenvalues sorted in descending order."""
    a = as_operator(a, tol)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(w[order], v[:, order])


@dataclass(frozen=True)
class PinvFactorization:
    """Moore-Penrose inverse of a real symmetric PSD matrix.

    Attributes
    ----------
    rank : int
        Number of eigenvalues kept above the cutoff.
    eigenvalues : ndarray
        The kept (positive) eigenvalues, descending.
    basis : ndarray
        ``n x rank`` orthonormal basis of the range.
    pinv : ndarray
        The pseudo-inverse.
    projector : ndarray
        Orthogonal projector onto the range.
    """

    rank: int
    eigenvalues: np.ndarray
    basis: np.ndarray
    pinv: np.ndarray
    projector: np.ndarray

    def sqrt_pinv(self) -> np.ndarray:
        b = self.basis
        return (b / np.sqrt(self.eigenvalues)) @ b.T

    def sqrt(self) -> np.ndarray:
        b = self.basis
        return (b * np.sqrt(self.eigenvalues)) @ b.T

    def penrose_residuals(self, m) -> tuple[float, float, float, float]:
        m = np.asarray(m, dtype=float)
        p = self.pinv
        mp = m @ p
        pm = p @ m
        return (
            float(np.linalg.norm(mp @ m - m)),
            float(np.linalg.norm(pm @ p - p)),
            float(np.linalg.norm(mp - mp.T)),
            float(np.linalg.norm(pm - pm.T)),
        )


def pinv_gram(m, rel_tol: float | None = None, *, dim: int = 1,
              tol_herm: float = DEFAULT.herm) -> PinvFactorization:
    """Pseudo-invert a Gram-type (real symmetric PSD) matrix.

    Eigenvalues below ``rel_tol * lambda_max`` count as zero.  A negative
    eigenvalue beyond that threshold means the input cannot be a Gram matrix
    and raises :class:`NotPSDError`.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n and np.max(np.abs(m - m.T)) > tol_herm:
        raise NotHermitianError("Gram matrix is not symmetric")
    if rel_tol is None:
        rel_tol = default_rel_tol(n, dim)
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    w, v = np.linalg.eigh(0.5 * (m + m.T)) if n else (np.zeros(0), np.zeros((0, 0)))
    scale = float(np.max(np.abs(w))) if n else 0.0
    cutoff = rel_tol * scale
    if n and w[0] < -cutoff:
        raise NotPSDError(f"Gram matrix has eigenvalue {w[0]:.3g} < 0")
    keep = w > cutoff
    w_kept = w[keep][::-1]
    basis = v[:, keep][:, ::-1]
    pinv = (basis / w_kept) @ basis.T if w_kept.size else np.zeros((n, n))
    projector = basis @ basis.T if w_kept.size else np.zeros((n, n))
    return PinvFactorization(int(w_kept.size), w_kept, basis, pinv, projector)


def sqrt_psd(m, tol_psd: float = DEFAULT.psd) -> np.ndarray:
    """Symmetric square root of a PSD matrix; round-off negatives are clamped."""
    m = np.asarray(m)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if w.size and w[0] < -tol_psd:
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3g} < 0")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return root.real if np.isrealobj(m) else root


def min_eigenvalue(a) -> float:
    a = np.asarray(a)
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])
