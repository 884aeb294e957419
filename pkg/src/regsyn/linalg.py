"""Dense complex matrix primitives.

Matrices are plain ``numpy`` complex arrays. The routines here are the few
operations the interpolation recursion keeps calling: inverse square roots
of Hermitian positive definite matrices, positive definiteness tests,
pivoted linear solves and one-dimensional kernels.

Hermitian eigendecompositions use a cyclic Jacobi sweep. The matrices that
reach it are tiny (Pick matrices and defect operators of at most a few
dozen rows), so the cubic cost per sweep does not matter and the result is
backward stable to working precision.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import (BoundViolated, DimensionMismatch, KernelNotOneDimensional,
                     NotHermitian, NotPositiveDefinite, Singular)

DEFAULT_TOL = 1e-9

__all__ = [
    "as_matrix", "opnorm", "hermitian_eig", "hermitian_sqrt_inverse",
    "is_positive_definite", "solve", "inverse_perturbation_bound",
    "kernel_vector", "tangential_blocks",
]


def as_matrix(M):
    """Return ``M`` as a 2-D complex array (scalars become 1x1)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        return M.reshape(1, 1)
    if M.ndim == 1:
        return M.reshape(-1, 1)
    return M


def opnorm(M):
    """Spectral norm (largest singular value)."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _require_square(M):
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")


def hermitian_eig(M, max_sweeps=60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    M : array_like
        Hermitian matrix. Only its Hermitian part is used.
    max_sweeps : int
        Upper bound on the number of full off-diagonal sweeps.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    V : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    A = as_matrix(M).copy()
    _require_square(A)
    A = 0.5 * (A + A.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = max(np.abs(A).max(initial=0.0), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        # direct norm: the difference of squared norms cancels catastrophically
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= 1e-15 * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                theta = (A[q, q].real - A[p, p].real) / (2.0 * r)
                t = 1.0 / (abs(theta) + np.hypot(1.0, theta))
                if theta < 0:
                    t = -t
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                G = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ G
                A[idx, :] = G.conj().T @ A[idx, :]
                A[q, p] = 0.0
                A[p, q] = 0.0
                V[:, idx] = V[:, idx] @ G
    w = np.diag(A).real.copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def _check_hermitian(M, tol):
    dev = np.abs(M - M.conj().T).max(initial=0.0)
    if dev > tol:
        raise NotHermitian(f"max |M - M*| = {dev:.3e} exceeds {tol:.1e}")


def hermitian_sqrt_inverse(M, tol=DEFAULT_TOL):
    """Inverse square root of a Hermitian positive definite matrix.

    Returns the Hermitian ``S`` with ``S @ M @ S = I``.

    Raises
    ------
    NotHermitian
        If ``M`` deviates from its adjoint by more than ``tol``.
    NotPositiveDefinite
        If the smallest eigenvalue is not above ``tol``.
    """
    M = as_matrix(M)
    _require_square(M)
    _check_hermitian(M, tol)
    w, V = hermitian_eig(M)
    if w.size and w[0] <= tol:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e} <= {tol:.1e}")
    S = (V * (1.0 / np.sqrt(w))) @ V.conj().T
    return 0.5 * (S + S.conj().T)


def is_positive_definite(M, tol=DEFAULT_TOL):
    """True iff ``M`` is Hermitian within ``tol`` with all eigenvalues above ``tol``."""
    M = as_matrix(M)
    _require_square(M)
    if M.size == 0:
        return True
    if np.abs(M - M.conj().T).max() > tol:
        return False
    w, _ = hermitian_eig(M)
    return bool(w[0] > tol)


def solve(M, B, pivot_tol=1e-13):
    """Solve ``M X = B`` by LU with partial pivoting.

    Raises
    ------
    Singular
        If a pivot falls below ``pivot_tol`` relative to the largest entry of ``M``.
    """
    M = as_matrix(M)
    _require_square(M)
    B = np.asarray(B, dtype=complex)
    vector_rhs = B.ndim == 1
    B2 = B.reshape(-1, 1) if vector_rhs else B
    if B2.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"cannot solve {M.shape} against {B.shape}")
    with warnings.catch_warnings():
        # exact zero pivots are reported as Singular below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    scale = max(np.abs(M).max(initial=0.0), np.finfo(float).tiny)
    smallest = np.abs(np.diag(lu)).min(initial=np.inf)
    if smallest <= pivot_tol * scale:
        raise Singular(f"pivot {smallest:.3e} below threshold")
    X = scipy.linalg.lu_solve((lu, piv), B2, check_finite=False)
    return X.ravel() if vector_rhs else X


def inverse_perturbation_bound(norm_Vinv, norm_diff):
    """Certified bound on ``|W^-1|`` given ``|V^-1|`` and ``|V - W|``.

    Raises
    ------
    BoundViolated
        If ``norm_Vinv * norm_diff >= 1`` (the perturbation may be singular).
    """
    prod = norm_Vinv * norm_diff
    if prod >= 1.0:
        raise BoundViolated(f"|V^-1| |V - W| = {prod:.6g} >= 1")
    return norm_Vinv / (1.0 - prod)


def kernel_vector(M, tol=DEFAULT_TOL):
    """Unit vector spanning a one-dimensional kernel.

    The smallest singular value must be below ``tol * max(1, |M|)`` and the
    second smallest above it. The phase is fixed by making the entry of
    largest modulus real and positive.

    Raises
    ------
    KernelNotOneDimensional
        If the singular value gap condition fails.
    """
    M = as_matrix(M)
    _require_square(M)
    _, s, Vh = np.linalg.svd(M)
    thresh = tol * max(1.0, s[0] if s.size else 0.0)
    if s[-1] >= thresh or (s.size > 1 and s[-2] <= thresh):
        raise KernelNotOneDimensional(
            f"singular values {s[-2:] if s.size > 1 else s} do not isolate a kernel")
    psi = Vh[-1].conj()
    mags = np.abs(psi)
    # first entry of (numerically) maximal modulus, so ties resolve by position
    k = int(np.nonzero(mags >= mags.max() * (1 - 1e-12))[0][0])
    psi = psi * (abs(psi[k]) / psi[k])
    psi[k] = abs(psi[k])
    return psi / np.linalg.norm(psi)


def tangential_blocks(E, tol=DEFAULT_TOL):
    """The four blocks of the J-unitary map attached to a strict contraction.

    ``A = (I - EE*)^{-1/2}``, ``B = -A E``, ``C = -(I - E*E)^{-1/2} E*`` and
    ``D = (I - E*E)^{-1/2}``.

    Returns
    -------
    A, B, C, D : ndarray
    """
    E = as_matrix(E)
    p, q = E.shape
    A = hermitian_sqrt_inverse(np.eye(p) - E @ E.conj().T, tol)
    D = hermitian_sqrt_inverse(np.eye(q) - E.conj().T @ E, tol)
    return A, -A @ E, -D @ E.conj().T, D
