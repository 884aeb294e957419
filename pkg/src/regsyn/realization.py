"""Discrete-time state-space realizations ``T(z) = D + C (zI - A)^{-1} B``.

The interpolation recursion composes linear fractional maps, products with
Blaschke-type factors and inverses. Doing that on coefficient grids makes
degrees balloon before cancellation; on realizations the same operations
are small block-matrix manipulations. Conversion to and from
:class:`~regsyn.rational.RationalMatrix` happens at the boundaries.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, Singular
from .rational import RationalMatrix, ScalarRational, poly_from_roots

__all__ = ["StateSpace", "series", "parallel", "mobius", "minreal",
           "to_rational", "from_rational", "realify", "controllability_basis"]


def _arr(x, shape=None):
    a = np.asarray(x, dtype=complex)
    if shape is not None:
        a = a.reshape(shape)
    return a


@dataclass(frozen=True)
class StateSpace:
    """Realization ``(A, B, C, D)`` of ``T(z) = D + C (zI - A)^{-1} B``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = np.atleast_2d(_arr(self.D))
        p, q = D.shape
        n = np.asarray(self.A).shape[0] if np.asarray(self.A).size else 0
        object.__setattr__(self, "A", _arr(self.A, (n, n)))
        object.__setattr__(self, "B", _arr(self.B, (n, q)))
        object.__setattr__(self, "C", _arr(self.C, (p, n)))
        object.__setattr__(self, "D", D)

    @classmethod
    def static(cls, D):
        D = np.atleast_2d(_arr(D))
        p, q = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, q)), np.zeros((p, 0)), D)

    @classmethod
    def scalar(cls, f, size=1):
        """Realize ``f(z) I_size`` for a proper :class:`ScalarRational` ``f``."""
        A, b, c, d = _companion(f)
        k = A.shape[0]
        I = np.eye(size)
        return cls(np.kron(A, I), np.kron(b.reshape(k, 1), I),
                   np.kron(c.reshape(1, k), I), d * I)

    @property
    def order(self):
        return self.A.shape[0]

    @property
    def shape(self):
        return self.D.shape

    def __call__(self, z):
        """Evaluate at a point or at an array of points."""
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        n = self.order
        if n == 0:
            out = np.broadcast_to(self.D, flat.shape + self.D.shape).copy()
        else:
            M = flat[:, None, None] * np.eye(n) - self.A
            X = np.linalg.solve(M, np.broadcast_to(self.B, (flat.size,) + self.B.shape))
            out = self.C @ X + self.D
        if z.ndim == 0:
            return out[0]
        return out.reshape(z.shape + self.D.shape)

    def derivative(self, z):
        """``T'(z) = -C (zI - A)^{-2} B`` at a point or array of points."""
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        n = self.order
        if n == 0:
            out = np.zeros(flat.shape + self.D.shape, dtype=complex)
        else:
            M = flat[:, None, None] * np.eye(n) - self.A
            X = np.linalg.solve(M, np.broadcast_to(self.B, (flat.size,) + self.B.shape))
            X = np.linalg.solve(M, X)
            out = -(self.C @ X)
        if z.ndim == 0:
            return out[0]
        return out.reshape(z.shape + self.D.shape)

    def poles(self):
        return np.linalg.eigvals(self.A) if self.order else np.zeros(0, dtype=complex)

    def __matmul__(self, other):
        return series(self, other)

    def __add__(self, other):
        return parallel(self, other)

    def __neg__(self):
        return StateSpace(self.A, self.B, -self.C, -self.D)

    def __sub__(self, other):
        return parallel(self, -other)

    def scale(self, k):
        return StateSpace(self.A, self.B, k * self.C, k * self.D)

    def left(self, M):
        """``M T(z)`` for a constant matrix ``M``."""
        M = np.atleast_2d(_arr(M))
        return StateSpace(self.A, self.B, M @ self.C, M @ self.D)

    def right(self, M):
        """``T(z) M`` for a constant matrix ``M``."""
        M = np.atleast_2d(_arr(M))
        return StateSpace(self.A, self.B @ M, self.C, self.D @ M)

    def inverse(self):
        """Realization of ``T^{-1}`` (requires ``D`` invertible)."""
        p, q = self.shape
        if p != q:
            raise DimensionMismatch("inverse of a non-square system")
        try:
            Di = np.linalg.inv(self.D)
        except np.linalg.LinAlgError as exc:
            raise Singular("feedthrough is singular; inverse is improper") from exc
        return StateSpace(self.A - self.B @ Di @ self.C, self.B @ Di, -Di @ self.C, Di)

    def delay(self):
        """``z^{-1} T(z)``: a unit delay on the output side."""
        p, q = self.shape
        shift = StateSpace(np.zeros((p, p)), np.eye(p), np.eye(p), np.zeros((p, p)))
        return series(shift, self)

    def conj(self):
        """Realization of ``z -> conj(T(conj(z)))``."""
        return StateSpace(self.A.conj(), self.B.conj(), self.C.conj(), self.D.conj())

    def is_real(self, tol=1e-10):
        return all(np.abs(M.imag).max(initial=0.0) <= tol * max(1.0, np.abs(M).max(initial=0.0))
                   for M in (self.A, self.B, self.C, self.D))

    def real(self):
        return StateSpace(self.A.real, self.B.real, self.C.real, self.D.real)


def _companion(f):
    """Controller-form realization of a proper scalar rational function."""
    num = np.asarray(f.num, dtype=complex)
    den = np.asarray(f.den, dtype=complex)
    k = len(den) - 1
    if len(num) - 1 > k:
        raise DimensionMismatch("improper scalar function has no realization")
    if k == 0:
        return np.zeros((0, 0)), np.zeros(0), np.zeros(0), num[0] / den[0]
    n = np.zeros(k + 1, dtype=complex)
    n[: len(num)] = num
    d = n[k]
    r = n[:k] - d * den[:k]
    A = np.zeros((k, k), dtype=complex)
    A[:-1, 1:] = np.eye(k - 1)
    A[-1, :] = -den[:k]
    b = np.zeros(k, dtype=complex)
    b[-1] = 1.0
    return A, b, r, d


def series(G1, G2):
    """Product ``G1(z) G2(z)``: the signal passes ``G2`` first."""
    if G1.shape[1] != G2.shape[0]:
        raise DimensionMismatch(f"{G1.shape} @ {G2.shape}")
    n1, n2 = G1.order, G2.order
    A = np.block([[G1.A, G1.B @ G2.C], [np.zeros((n2, n1)), G2.A]])
    B = np.vstack([G1.B @ G2.D, G2.B])
    C = np.hstack([G1.C, G1.D @ G2.C])
    return StateSpace(A, B, C, G1.D @ G2.D)


def parallel(G1, G2):
    if G1.shape != G2.shape:
        raise DimensionMismatch(f"{G1.shape} + {G2.shape}")
    return StateSpace(scipy.linalg.block_diag(G1.A, G2.A), np.vstack([G1.B, G2.B]),
                      np.hstack([G1.C, G2.C]), G1.D + G2.D)


def mobius(Am, Bm, Cm, Dm, Psi):
    """Realize ``(Am Psi - Bm)(-Cm Psi + Dm)^{-1}`` for constant blocks.

    The numerator and denominator share the state of ``Psi``, so the result
    keeps the order of ``Psi``.
    """
    cN, dN = Am @ Psi.C, Am @ Psi.D - Bm
    c1, d1 = -Cm @ Psi.C, Dm - Cm @ Psi.D
    try:
        d1i = np.linalg.inv(d1)
    except np.linalg.LinAlgError as exc:
        raise Singular("linear fractional map is singular at infinity") from exc
    return StateSpace(Psi.A - Psi.B @ d1i @ c1, Psi.B @ d1i, cN - dN @ d1i @ c1, dN @ d1i)


def controllability_basis(A, B, tol):
    """Orthonormal basis of the controllable subspace by block Krylov steps."""
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(B, 2) if B.size else 0.0)
    basis = np.zeros((n, 0), dtype=complex)
    new = B
    for _ in range(n + 1):
        if new.shape[1] == 0:
            break
        for _ in range(2):
            new = new - basis @ (basis.conj().T @ new)
        U, s, _ = np.linalg.svd(new, full_matrices=False)
        r = int(np.sum(s > tol * scale))
        if r == 0:
            break
        new_basis = U[:, :r]
        basis = np.hstack([basis, new_basis])
        if basis.shape[1] >= n:
            break
        new = A @ new_basis
    return basis


def minreal(G, tol=1e-9):
    """Remove uncontrollable and unobservable states.

    Parameters
    ----------
    G : StateSpace
    tol : float
        Relative singular value threshold for rank decisions.
    """
    if G.order == 0:
        return G
    V = controllability_basis(G.A, G.B, tol)
    A, B, C = V.conj().T @ G.A @ V, V.conj().T @ G.B, G.C @ V
    if A.shape[0] == 0:
        return StateSpace.static(G.D)
    W = controllability_basis(A.conj().T, C.conj().T, tol)
    A, B, C = W.conj().T @ A @ W, W.conj().T @ B, C @ W
    if A.shape[0] == 0:
        return StateSpace.static(G.D)
    return StateSpace(A, B, C, G.D)


def _entry_rational(G, i, j, tol, n_fft=None):
    sub = minreal(StateSpace(G.A, G.B[:, j:j + 1], G.C[i:i + 1, :], G.D[i:i + 1, j:j + 1]), tol)
    k = sub.order
    if k == 0:
        return ScalarRational([sub.D[0, 0]])
    den = poly_from_roots(np.linalg.eigvals(sub.A))
    # numerator = T * den is a polynomial of degree <= k: recover it by FFT
    m = n_fft or max(16, 1 << int(np.ceil(np.log2(k + 1))))
    # sample on a circle that keeps clear of the poles (a pole on a node
    # would poison every coefficient)
    poles = np.linalg.eigvals(sub.A)
    best = None
    for r in (1.0, 1.2, 0.85, 1.5):
        for off in (0.0, 0.5, 0.25):
            zs = r * np.exp(2j * np.pi * (np.arange(m) + off) / m)
            gap = np.abs(zs[:, None] - poles[None, :]).min() / r
            if best is None or gap > best[0] + 1e-12:
                best = (gap, r, off, zs)
            if gap > 0.5 * np.pi / m:
                break
        if best[0] > 0.5 * np.pi / m:
            break
    _, r, off, zs = best
    vals = sub(zs)[:, 0, 0] * np.polynomial.polynomial.polyval(zs, den)
    kk = np.arange(m)
    num = np.fft.fft(vals) / m / (r ** kk * np.exp(2j * np.pi * kk * off / m))
    # minreal already removed the common factors; root matching would only
    # cancel nearly coincident but genuine pole-zero pairs
    return ScalarRational(num[: k + 1], den, cancel_tol=0)


def to_rational(G, tol=1e-9):
    """Entrywise rational form of a realization."""
    p, q = G.shape
    return RationalMatrix([[_entry_rational(G, i, j, tol) for j in range(q)] for i in range(p)])


def from_rational(F, tol=1e-9):
    """Minimal realization of a proper :class:`RationalMatrix`."""
    if isinstance(F, ScalarRational):
        F = RationalMatrix.scalar(F)
    p, q = F.shape
    blocks_A, cols_B, rows_C = [], [], []
    D = np.zeros((p, q), dtype=complex)
    for i in range(p):
        for j in range(q):
            A, b, c, d = _companion(F[i, j])
            D[i, j] = d
            k = A.shape[0]
            if k == 0:
                continue
            blocks_A.append(A)
            Bb = np.zeros((k, q), dtype=complex)
            Bb[:, j] = b
            Cb = np.zeros((p, k), dtype=complex)
            Cb[i, :] = c
            cols_B.append(Bb)
            rows_C.append(Cb)
    if not blocks_A:
        return StateSpace.static(D)
    G = StateSpace(scipy.linalg.block_diag(*blocks_A), np.vstack(cols_B), np.hstack(rows_C), D)
    return minreal(G, tol)


def realify(G):
    """Realization of ``(T(z) + conj(T(conj z))) / 2`` with real matrices."""
    n = G.order
    Gs = parallel(G, G.conj()).scale(0.5)
    if n == 0:
        return StateSpace.static(Gs.D.real)
    I = np.eye(n)
    S = np.block([[I, I], [1j * I, -1j * I]])
    Si = 0.5 * np.block([[I, -1j * I], [I, 1j * I]])
    A = S @ Gs.A @ Si
    B = S @ Gs.B
    C = Gs.C @ Si
    return StateSpace(A.real, B.real, C.real, Gs.D.real)
