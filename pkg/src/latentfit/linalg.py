"""Dense symmetric linear algebra: Jacobi eigendecomposition and Cholesky-based
determinant and inverse.

Matrices are plain ``numpy`` arrays. :func:`sym_matrix` validates and
freezes an input; every other function calls it on entry.
"""
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYM_RTOL = 1e-12


class LinAlgError(ValueError):
    """Base class for matrix errors raised by this module."""


class NotPositiveDefiniteError(LinAlgError):
    def __init__(self, pivot, name=None):
        self.pivot = pivot
        where = f" {name}" if name else ""
        super().__init__(f"matrix{where} is not positive definite (Cholesky pivot {pivot})")


class ConvergenceError(LinAlgError):
    pass


def sym_matrix(m, *, atol=None):
    """Return ``m`` as a read-only, exactly symmetric float array.

    Entries must be finite. Asymmetry larger than ``atol`` raises; smaller
    asymmetry is removed by averaging the two triangles. The default
    tolerance, ``SYM_RTOL * max(1, max|m|)``, absorbs round-off only.
    """
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise LinAlgError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinAlgError("matrix has non-finite entries")
    gap = np.max(np.abs(a - a.T))
    if atol is None:
        atol = SYM_RTOL * max(1.0, float(np.max(np.abs(a))))
    if gap > atol:
        raise LinAlgError(f"matrix is not symmetric (max |a_ij - a_ji| = {gap:.3g})")
    if gap > 0:
        a = (a + a.T) / 2.0
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def eigen_sym(m, name=None):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Values are sorted descending (stable on ties). Each eigenvector is
    flipped so its largest-magnitude entry is non-negative, ties going to
    the lowest index.
    """
    a = sym_matrix(m)
    scale = max(1.0, float(np.linalg.norm(a)))
    tol = JACOBI_TOL * a.shape[0] * scale
    diag, vecs, sweeps, off = kernels.jacobi_eigen(np.ascontiguousarray(a), tol, JACOBI_MAX_SWEEPS)
    if not off < tol:
        label = f" {name}" if name else ""
        raise ConvergenceError(
            f"Jacobi on matrix{label} did not converge in {JACOBI_MAX_SWEEPS} sweeps "
            f"(off-diagonal norm {off:.3g})"
        )
    order = np.argsort(-diag, kind="stable")
    values = diag[order]
    vectors = vecs[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[lead, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return EigenDecomposition(values=values, vectors=vectors * signs, sweeps=sweeps)


def cholesky(m, name=None):
    """Lower Cholesky factor; raises :class:`NotPositiveDefiniteError`."""
    a = np.ascontiguousarray(m, dtype=np.float64)
    l, pivot = kernels.cholesky(a)
    if pivot >= 0:
        raise NotPositiveDefiniteError(pivot, name)
    return l


def log_det(m, name=None):
    """ln|m| for positive definite ``m``, from the Cholesky diagonal."""
    return kernels.cholesky_logdet(cholesky(sym_matrix(m), name))


def inverse(m, name=None):
    """Inverse of a positive definite matrix via Cholesky."""
    a = sym_matrix(m)
    out = kernels.cholesky_inverse(cholesky(a, name))
    out.flags.writeable = False
    return out


def is_positive_definite(m):
    return kernels.cholesky(np.ascontiguousarray(m, dtype=np.float64))[1] < 0
