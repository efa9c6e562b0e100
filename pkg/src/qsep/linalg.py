"""Dense complex linear algebra for small Hermitian positive-definite matrices.

Everything here targets receive-covariance matrices of a few dozen antennas
at most, so the algorithms favour accuracy and simplicity over asymptotic
speed: eigendecomposition is done with cyclic Jacobi rotations and
factorizations are unblocked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, NotHermitianError, NotPositiveDefiniteError

HERMITIAN_TOL_FACTOR = 1e-12
JACOBI_SWEEP_BUDGET = 30
JACOBI_OFFDIAG_TOL = 1e-13


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition A = V diag(values) V^H with ascending real eigenvalues."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular L with A = L L^H and a strictly positive real diagonal."""

    lower: np.ndarray


def require_hermitian(a: np.ndarray, tol_factor: float = HERMITIAN_TOL_FACTOR) -> np.ndarray:
    """Validate (and return) a square matrix as Hermitian within tolerance.

    The symmetry test is |A_ij - conj(A_ji)| <= tol_factor * max|A| for all
    entries; the max-magnitude scaling keeps the test meaningful for matrices
    far from unit scale.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return a
    if np.max(np.abs(a - a.conj().T)) > tol_factor * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return a


def eig_hermitian(a: np.ndarray) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation zeroes one off-diagonal pair through a complex plane
    rotation (a diagonal phase that makes the pivot real, followed by the
    classic real Jacobi angle). Convergence is declared when the
    off-diagonal Frobenius norm drops below ``JACOBI_OFFDIAG_TOL * ||A||_F``;
    the sweep budget guards against pathological non-convergence.
    """
    a = require_hermitian(a)
    n = a.shape[0]
    work = a.copy()
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return HermitianEigen(np.array([work[0, 0].real]), v)

    norm_a = np.linalg.norm(a)
    converged = False
    for _ in range(JACOBI_SWEEP_BUDGET):
        off = np.linalg.norm(work - np.diag(np.diag(work)))
        if off <= JACOBI_OFFDIAG_TOL * norm_a:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                # Real rotation angle for the phase-normalized 2x2 block.
                tau = (work[q, q].real - work[p, p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sr = t * c
                upp, upq = c, sr
                uqp, uqq = -sr * np.conj(phase), c * np.conj(phase)

                colp = work[:, p] * upp + work[:, q] * uqp
                colq = work[:, p] * upq + work[:, q] * uqq
                work[:, p] = colp
                work[:, q] = colq
                rowp = np.conj(upp) * work[p, :] + np.conj(uqp) * work[q, :]
                rowq = np.conj(upq) * work[p, :] + np.conj(uqq) * work[q, :]
                work[p, :] = rowp
                work[q, :] = rowq

                colp = v[:, p] * upp + v[:, q] * uqp
                colq = v[:, p] * upq + v[:, q] * uqq
                v[:, p] = colp
                v[:, q] = colq
    if not converged:
        off = np.linalg.norm(work - np.diag(np.diag(work)))
        if off > JACOBI_OFFDIAG_TOL * norm_a:
            raise NoConvergenceError(
                f"Jacobi sweeps exhausted (off-diagonal norm {off:.3e})"
            )

    lam = np.diag(work).real.copy()
    order = np.argsort(lam, kind="stable")
    return HermitianEigen(lam[order], v[:, order])


def cholesky(a: np.ndarray) -> CholeskyFactor:
    """Unblocked Cholesky factorization A = L L^H of a Hermitian PD matrix.

    Positive-definiteness is decided by the pivots themselves, which is the
    numerically robust test for this size regime.
    """
    a = require_hermitian(a)
    n = a.shape[0]
    lower = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        s = a[j, j].real - np.sum(np.abs(lower[j, :j]) ** 2)
        if s <= 0.0:
            raise NotPositiveDefiniteError(f"nonpositive pivot at column {j}")
        lower[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            acc = a[i, j] - np.dot(lower[i, :j], lower[j, :j].conj())
            lower[i, j] = acc / lower[j, j]
    return CholeskyFactor(lower)


def det_hermitian_pd(a: np.ndarray) -> float:
    """Determinant of a Hermitian PD matrix via the Cholesky diagonal product."""
    lower = cholesky(a).lower
    return float(np.prod(np.diag(lower).real ** 2))


def hermitian_function(eig: HermitianEigen, values: np.ndarray) -> np.ndarray:
    """Assemble V diag(values) V^H for per-eigenvalue transformed values."""
    v = eig.eigenvectors
    return (v * np.asarray(values)) @ v.conj().T


def hermitian_sqrt(a: np.ndarray, eig: HermitianEigen | None = None) -> np.ndarray:
    """Principal square root of a Hermitian PD matrix."""
    if eig is None:
        eig = eig_hermitian(a)
    if np.any(eig.eigenvalues <= 0.0):
        raise NotPositiveDefiniteError("nonpositive eigenvalue in matrix square root")
    return hermitian_function(eig, np.sqrt(eig.eigenvalues))


def amrc_weight_matrix(
    k: np.ndarray, rho: float, eig: HermitianEigen | None = None
) -> np.ndarray:
    """Fused combiner weight W = (rho K + I)^(1/2) K^(-1/2).

    Because rho K + I commutes with K, both square roots share K's
    eigenbasis and W reduces to V diag(sqrt(rho lam + 1) / sqrt(lam)) V^H,
    computed from a single eigendecomposition. W is Hermitian PD.
    """
    if rho <= 0.0:
        raise NotPositiveDefiniteError("rho must be positive")
    if eig is None:
        eig = eig_hermitian(k)
    lam = eig.eigenvalues
    if np.any(lam <= 0.0):
        raise NotPositiveDefiniteError("covariance has a nonpositive eigenvalue")
    return hermitian_function(eig, np.sqrt(rho * lam + 1.0) / np.sqrt(lam))
