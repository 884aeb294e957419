"""Scalar and matrix rational functions with complex coefficients.

Polynomials are coefficient arrays in ascending degree, so ``[c0, c1, c2]``
stands for ``c0 + c1 z + c2 z**2``. A :class:`ScalarRational` is kept in
canonical form: trailing negligible coefficients trimmed, common roots of
numerator and denominator cancelled by approximate root matching, and the
denominator made monic. A :class:`RationalMatrix` is a grid of those.

Floating point coefficients rule out exact GCDs, so cancellation is done by
pairing roots that agree within a small relative radius. The radius is a
keyword on every constructor and never a module global.
"""

from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (DegenerateDerivative, DegreeCapExceeded, DegreeZero,
                     DimensionMismatch, NotAZero, NotInHinf, PoleHit,
                     ZeroNumerator)

CANCEL_TOL = 1e-8
CLUSTER_TOL = 1e-6
TRIM_TOL = 1e-14
POLE_TOL = 1e-9
DEGREE_CAP = 64

__all__ = [
    "ScalarRational", "RationalMatrix", "roots", "root_multiplicities",
    "poly_from_roots", "evaluate", "derivative", "hinf_norm_exterior", "mul",
    "add", "sub", "scalar_inverse", "factor_out_boundary_zeros",
    "canonicalize",
]


# -- polynomials -----------------------------------------------------------

def _trim(c, rel=TRIM_TOL):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    big = np.abs(c).max()
    if big == 0.0:
        return np.zeros(1, dtype=complex)
    keep = np.nonzero(np.abs(c) > rel * big)[0]
    return c[: keep[-1] + 1].copy()


def _degree(c):
    return len(c) - 1


def poly_from_roots(rts):
    """Monic polynomial (ascending coefficients) with the given roots."""
    rts = np.asarray(rts, dtype=complex)
    if rts.size == 0:
        return np.ones(1, dtype=complex)
    return np.asarray(P.polyfromroots(rts), dtype=complex)


def roots(p, polish=True):
    """All complex roots of a polynomial given in ascending coefficients.

    Computed as companion matrix eigenvalues followed by one Newton step
    each.

    Raises
    ------
    DegreeZero
        If the polynomial is constant.
    """
    c = _trim(p)
    if _degree(c) < 1:
        raise DegreeZero("a constant polynomial has no roots")
    r = np.roots(c[::-1]).astype(complex)
    if polish:
        dc = P.polyder(c)
        f = P.polyval(r, c)
        df = P.polyval(r, dc)
        ok = np.abs(df) > 1e-300
        step = np.zeros_like(r)
        step[ok] = f[ok] / df[ok]
        # a Newton step on a clustered root can overshoot; keep it only if it helps
        trial = r - step
        better = np.abs(P.polyval(trial, c)) <= np.abs(f)
        r = np.where(better, trial, r)
    return r


def root_multiplicities(rts, tol=CLUSTER_TOL):
    """Group roots that agree within ``tol`` (relative) into clusters.

    Returns
    -------
    list of (complex, int)
        Cluster mean and multiplicity, in order of first appearance.
    """
    rts = list(np.asarray(rts, dtype=complex))
    out = []
    used = [False] * len(rts)
    for i, r in enumerate(rts):
        if used[i]:
            continue
        group = [r]
        used[i] = True
        for j in range(i + 1, len(rts)):
            if not used[j] and abs(rts[j] - r) <= tol * max(1.0, abs(r)):
                group.append(rts[j])
                used[j] = True
        out.append((complex(np.mean(group)), len(group)))
    return out


def _match_roots(rn, rd, tol):
    """Greedy nearest pairing of numerator and denominator roots."""
    rn = list(rn)
    rd = list(rd)
    pairs = []
    while rn and rd:
        dist = np.abs(np.subtract.outer(np.array(rn), np.array(rd)))
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[i, j] > tol * max(1.0, abs(rd[j])):
            break
        pairs.append((rn.pop(i), rd.pop(j)))
    return pairs


def _exact_horner(c, z):
    """Value and first derivative of a polynomial at a scalar point.

    The float coefficients and the point are converted to exact rationals,
    so the only rounding happens when the two results are converted back.
    Near the unit circle a high-degree polynomial can sit many orders of
    magnitude below the sum of its coefficient moduli, and plain Horner
    then loses most of its digits.
    """
    zr, zi = Fraction(z.real), Fraction(z.imag)
    pr = pi = dr = di = Fraction(0)
    for ck in c[::-1]:
        # derivative first: it uses the previous value
        dr, di = dr * zr - di * zi + pr, dr * zi + di * zr + pi
        pr, pi = pr * zr - pi * zi + Fraction(ck.real), pr * zi + pi * zr + Fraction(ck.imag)
    return complex(float(pr), float(pi)), complex(float(dr), float(di)), (pr, pi, dr, di)


# -- scalar rationals ------------------------------------------------------

class ScalarRational:
    """Canonical scalar rational function ``num(z) / den(z)``.

    Parameters
    ----------
    num, den : array_like
        Ascending coefficients. ``den`` defaults to 1.
    cancel_tol : float
        Relative radius for cancelling common roots.
    """

    __slots__ = ("num", "den", "_poles")

    def __init__(self, num, den=(1.0,), cancel_tol=CANCEL_TOL):
        num = _trim(num)
        den = _trim(den)
        if not np.any(den):
            raise ZeroDivisionError("zero denominator polynomial")
        self._poles = None
        if not np.any(num):
            self.num = np.zeros(1, dtype=complex)
            self.den = np.ones(1, dtype=complex)
            return
        if _degree(num) >= 1 and _degree(den) >= 1 and cancel_tol > 0:
            pairs = _match_roots(roots(num), roots(den), cancel_tol)
            if pairs:
                common = poly_from_roots([0.5 * (a + b) for a, b in pairs])
                num = _trim(P.polydiv(num, common)[0])
                den = _trim(P.polydiv(den, common)[0])
        lead = den[-1]
        self.num = num / lead
        self.den = den / lead
        if max(_degree(self.num), _degree(self.den)) > DEGREE_CAP:
            raise DegreeCapExceeded(
                f"degree {max(_degree(self.num), _degree(self.den))} exceeds {DEGREE_CAP}")

    # construction helpers
    @classmethod
    def constant(cls, c):
        return cls([c])

    @classmethod
    def from_zpk(cls, zeros, poles, gain=1.0, cancel_tol=CANCEL_TOL):
        return cls(gain * poly_from_roots(zeros), poly_from_roots(poles), cancel_tol)

    # structure
    @property
    def num_degree(self):
        return -1 if self.is_zero() else _degree(self.num)

    @property
    def den_degree(self):
        return _degree(self.den)

    def is_zero(self):
        return not np.any(self.num)

    def is_proper(self):
        return self.num_degree <= self.den_degree

    def is_strictly_proper(self):
        return self.num_degree < self.den_degree

    def poles(self):
        if self._poles is None:
            self._poles = (roots(self.den) if self.den_degree > 0
                           else np.zeros(0, dtype=complex))
        return self._poles.copy()

    def zeros(self):
        return roots(self.num) if self.num_degree > 0 else np.zeros(0, dtype=complex)

    # evaluation
    def _check_poles(self, z, pole_tol):
        if self.den_degree == 0:
            return
        if self._poles is None:
            self.poles()
        dist = np.abs(np.reshape(z, (-1, 1)) - self._poles.reshape(1, -1)).min()
        if dist <= pole_tol * max(1.0, float(np.abs(z).max())):
            raise PoleHit(f"evaluation within {dist:.3e} of a pole")

    def __call__(self, z, pole_tol=1e-12):
        """Evaluate at a point or an array of points.

        A scalar point is evaluated exactly from the stored coefficients
        (see :func:`_exact_horner`); arrays use vectorized Horner.

        Raises
        ------
        PoleHit
            If a point lies within ``pole_tol`` (relative) of a pole.
        """
        z = np.asarray(z, dtype=complex)
        self._check_poles(z, pole_tol)
        if z.ndim == 0:
            n = _exact_horner(self.num, complex(z))[2]
            d = _exact_horner(self.den, complex(z))[2]
            den2 = d[0] * d[0] + d[1] * d[1]
            if den2 == 0:
                raise PoleHit(f"denominator vanishes at {complex(z)}")
            return complex(float((n[0] * d[0] + n[1] * d[1]) / den2),
                           float((n[1] * d[0] - n[0] * d[1]) / den2))
        d = P.polyval(z, self.den)
        if np.any(d == 0):
            raise PoleHit("denominator vanishes on the grid")
        return P.polyval(z, self.num) / d

    def derivative_at(self, z, pole_tol=1e-12):
        """Derivative at a scalar point by the quotient rule, evaluated exactly."""
        z = complex(z)
        self._check_poles(np.asarray(z), pole_tol)
        nr, ni, npr, npi = _exact_horner(self.num, z)[2]
        dr, di, dpr, dpi = _exact_horner(self.den, z)[2]
        # (n' d - n d') / d^2
        ar = npr * dr - npi * di - (nr * dpr - ni * dpi)
        ai = npr * di + npi * dr - (nr * dpi + ni * dpr)
        sr, si = dr * dr - di * di, 2 * dr * di
        s2 = sr * sr + si * si
        if s2 == 0:
            raise PoleHit(f"denominator vanishes at {z}")
        return complex(float((ar * sr + ai * si) / s2), float((ai * sr - ar * si) / s2))

    def derivative(self):
        n, d = self.num, self.den
        num = P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))
        return ScalarRational(num, P.polymul(d, d))

    def reciprocal_argument(self):
        """The function ``z -> F(1/z)``."""
        k = max(_degree(self.num), _degree(self.den))
        num = np.zeros(k + 1, dtype=complex)
        den = np.zeros(k + 1, dtype=complex)
        num[: len(self.num)] = self.num
        den[: len(self.den)] = self.den
        # reversal maps canonical to canonical, so no root matching is needed
        return ScalarRational(num[::-1], den[::-1], cancel_tol=0)

    def inverse(self):
        if self.is_zero():
            raise ZeroNumerator("cannot invert the zero function")
        return ScalarRational(self.den, self.num)

    # arithmetic
    @staticmethod
    def _coerce(other):
        if isinstance(other, ScalarRational):
            return other
        return ScalarRational([complex(other)])

    def __add__(self, other):
        o = self._coerce(other)
        if np.array_equal(self.den, o.den):
            return ScalarRational(P.polyadd(self.num, o.num), self.den)
        num = P.polyadd(P.polymul(self.num, o.den), P.polymul(o.num, self.den))
        return ScalarRational(num, P.polymul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return ScalarRational(-self.num, self.den, cancel_tol=0)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return ScalarRational(P.polymul(self.num, o.num), P.polymul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __eq__(self, other):
        if not isinstance(other, ScalarRational):
            return NotImplemented
        return np.array_equal(self.num, other.num) and np.array_equal(self.den, other.den)

    __hash__ = None

    def conj_coefficients(self):
        return ScalarRational(self.num.conj(), self.den.conj(), cancel_tol=0)

    def real_coefficients(self):
        return ScalarRational(self.num.real, self.den.real, cancel_tol=0)

    def __repr__(self):
        return f"ScalarRational(num={_fmt(self.num)}, den={_fmt(self.den)})"


def _fmt(c):
    if np.all(np.abs(np.imag(c)) <= 1e-14 * max(1.0, np.abs(c).max())):
        return np.array2string(np.real(c), precision=6)
    return np.array2string(c, precision=6)


# -- matrices --------------------------------------------------------------

class RationalMatrix:
    """A ``p x q`` grid of :class:`ScalarRational` entries."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [tuple(e if isinstance(e, ScalarRational) else ScalarRational([e])
                      for e in row) for row in entries]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise DimensionMismatch("ragged or empty entry grid")
        self.entries = tuple(rows)

    # constructors
    @classmethod
    def scalar(cls, f):
        return cls([[f]])

    @classmethod
    def constant(cls, M):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls([[ScalarRational([v]) for v in row] for row in M])

    @classmethod
    def identity(cls, p):
        return cls.constant(np.eye(p))

    @classmethod
    def zeros(cls, p, q):
        return cls.constant(np.zeros((p, q)))

    @classmethod
    def diag_scalar(cls, f, p):
        z = ScalarRational([0.0])
        return cls([[f if i == j else z for j in range(p)] for i in range(p)])

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def properness(self):
        """'strictly proper', 'proper' or 'improper'."""
        flat = [e for row in self.entries for e in row]
        if all(e.is_strictly_proper() for e in flat):
            return "strictly proper"
        if all(e.is_proper() for e in flat):
            return "proper"
        return "improper"

    def poles(self):
        out = [e.poles() for row in self.entries for e in row]
        return np.concatenate(out) if out else np.zeros(0, dtype=complex)

    def __call__(self, z):
        """Evaluate at a point (``p x q``) or an array of points (``... x p x q``)."""
        z = np.asarray(z, dtype=complex)
        vals = np.array([[e(z) for e in row] for row in self.entries])
        if z.ndim == 0:
            return vals.astype(complex)
        return np.moveaxis(vals, (0, 1), (-2, -1))

    def map(self, fn):
        return RationalMatrix([[fn(e) for e in row] for row in self.entries])

    def derivative(self):
        return self.map(lambda e: e.derivative())

    def derivative_at(self, z):
        """Entrywise derivative at a scalar point without forming ``F'``."""
        return np.array([[e.derivative_at(z) for e in row] for row in self.entries],
                        dtype=complex)

    def reciprocal_argument(self):
        return self.map(lambda e: e.reciprocal_argument())

    def real_coefficients(self):
        return self.map(lambda e: e.real_coefficients())

    @property
    def T(self):
        p, q = self.shape
        return RationalMatrix([[self.entries[i][j] for i in range(p)] for j in range(q)])

    def max_imag_coefficient(self):
        worst = 0.0
        for row in self.entries:
            for e in row:
                worst = max(worst, np.abs(e.num.imag).max(), np.abs(e.den.imag).max())
        return float(worst)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, RationalMatrix):
            return other
        if isinstance(other, ScalarRational):
            return RationalMatrix.diag_scalar(other, self.shape[0])
        arr = np.asarray(other, dtype=complex)
        if arr.ndim == 0:
            return RationalMatrix.constant(arr * np.eye(self.shape[0]))
        return RationalMatrix.constant(arr)

    def __add__(self, other):
        o = self._coerce(other)
        if o.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} + {o.shape}")
        return RationalMatrix([[a + b for a, b in zip(ra, rb)]
                               for ra, rb in zip(self.entries, o.entries)])

    __radd__ = __add__

    def __neg__(self):
        return self.map(lambda e: -e)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __matmul__(self, other):
        o = self._coerce(other)
        (p, k), (k2, q) = self.shape, o.shape
        if k != k2:
            raise DimensionMismatch(f"{self.shape} @ {o.shape}")
        out = []
        for i in range(p):
            row = []
            for j in range(q):
                acc = ScalarRational([0.0])
                for m in range(k):
                    acc = acc + self.entries[i][m] * o.entries[m][j]
                row.append(acc)
            out.append(row)
        return RationalMatrix(out)

    def __rmatmul__(self, other):
        return self._coerce(other) @ self

    def __mul__(self, other):
        if isinstance(other, RationalMatrix):
            return self @ other
        if isinstance(other, ScalarRational):
            return self.map(lambda e: e * other)
        return self.map(lambda e: e * complex(other))

    __rmul__ = __mul__

    def det(self):
        p, q = self.shape
        if p != q:
            raise DimensionMismatch("determinant of a non-square matrix")
        if p == 1:
            return self.entries[0][0]
        acc = ScalarRational([0.0])
        for j in range(p):
            acc = acc + ((-1) ** j) * self.entries[0][j] * self._minor(0, j).det()
        return acc

    def _minor(self, i, j):
        return RationalMatrix([[e for c, e in enumerate(row) if c != j]
                               for r, row in enumerate(self.entries) if r != i])

    def adjugate(self):
        p, _ = self.shape
        if p == 1:
            return RationalMatrix.identity(1)
        return RationalMatrix([[((-1) ** (i + j)) * self._minor(j, i).det()
                                for j in range(p)] for i in range(p)])

    def inverse(self):
        d = self.det()
        if d.is_zero():
            raise ZeroNumerator("singular rational matrix")
        return self.adjugate() * d.inverse()

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    __hash__ = None

    def __repr__(self):
        body = ",\n ".join("[" + ", ".join(repr(e) for e in row) + "]" for row in self.entries)
        return f"RationalMatrix([{body}])"


# -- module level operations -----------------------------------------------

def _as_rm(F):
    if isinstance(F, RationalMatrix):
        return F
    if isinstance(F, ScalarRational):
        return RationalMatrix.scalar(F)
    return RationalMatrix.constant(F)


def canonicalize(F, cancel_tol=CANCEL_TOL):
    """Re-canonicalize every entry (a no-op on already canonical input)."""
    if isinstance(F, ScalarRational):
        return ScalarRational(F.num, F.den, cancel_tol)
    return _as_rm(F).map(lambda e: ScalarRational(e.num, e.den, cancel_tol))


def evaluate(F, z):
    """Entrywise evaluation; raises :class:`PoleHit` at a pole."""
    return _as_rm(F)(z)


def derivative(F):
    """Entrywise quotient-rule derivative."""
    if isinstance(F, ScalarRational):
        return F.derivative()
    return _as_rm(F).derivative()


def mul(F, G):
    return _as_rm(F) @ _as_rm(G)


def add(F, G):
    return _as_rm(F) + _as_rm(G)


def sub(F, G):
    return _as_rm(F) - _as_rm(G)


def scalar_inverse(F):
    """Inverse of a 1x1 rational matrix."""
    F = _as_rm(F)
    if F.shape != (1, 1):
        raise DimensionMismatch(f"scalar_inverse needs 1x1, got {F.shape}")
    return RationalMatrix.scalar(F[0, 0].inverse())


def _sigma_max(vals):
    if vals.shape[-2:] == (1, 1):
        return np.abs(vals[..., 0, 0])
    return np.linalg.svd(vals, compute_uv=False)[..., 0]


def hinf_norm_exterior(F, grid_points=4096, pole_tol=POLE_TOL, full_output=False):
    """Supremum of the largest singular value of ``F`` on the unit circle.

    ``F`` must be analytic on ``|z| > 1`` (including infinity), so all poles
    lie strictly inside the unit disk. The circle is sampled uniformly and
    the best sample is refined by golden-section search on the neighbouring
    interval.

    Parameters
    ----------
    F : RationalMatrix or ScalarRational or callable
        The function. A callable must map an array of points to an array of
        matrices and is assumed analytic on the exterior.
    grid_points : int
        Number of uniform samples.
    full_output : bool
        Also return the maximizing angle and the grid spacing.

    Raises
    ------
    NotInHinf
        If a pole lies on or outside the unit circle.
    """
    if isinstance(F, (RationalMatrix, ScalarRational)) or not callable(F):
        Fm = _as_rm(F)
        for row in Fm.entries:
            for e in row:
                if e.den_degree > 0 and np.any(np.abs(e.poles()) >= 1.0 - pole_tol):
                    raise NotInHinf("pole on or outside the unit circle")
                if not e.is_proper():
                    raise NotInHinf("improper entry is unbounded at infinity")
        func = Fm
    else:
        func = F

    def f(theta):
        vals = np.asarray(func(np.exp(1j * np.asarray(theta))), dtype=complex)
        if vals.ndim < 2:
            vals = vals.reshape(vals.shape + (1, 1))
        return _sigma_max(vals)

    h = 2 * np.pi / grid_points
    thetas = np.arange(grid_points) * h
    vals = f(thetas)
    k = int(np.argmax(vals))
    a, b = thetas[k] - h, thetas[k] + h
    g = (np.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(60):
        if f1 > f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
    best, theta = float(vals[k]), float(thetas[k])
    for x, fx in ((x1, f1), (x2, f2)):
        if float(fx) > best:
            best, theta = float(fx), float(x)
    if full_output:
        return best, theta, h
    return best


def factor_out_boundary_zeros(F, points, zero_tol=1e-6, det_tol=1e-10):
    """Divide ``F`` by ``prod(z - lam)`` over unimodular zeros ``lam``.

    Returns ``Zhat`` with ``F(z) = prod(z - lam) Zhat(z)``.

    Raises
    ------
    NotAZero
        If ``F(lam)`` is not negligible.
    DegenerateDerivative
        If ``F'(lam)`` is singular (``F`` square) or zero.
    """
    F = _as_rm(F)
    dF = F.derivative()
    p, q = F.shape
    for lam in points:
        val = F(lam)
        scale = max(1.0, np.abs(dF(lam)).max())
        if np.abs(val).max() > zero_tol * scale:
            raise NotAZero(f"|F({lam})| = {np.abs(val).max():.3e}")
        dv = dF(lam)
        degenerate = (abs(np.linalg.det(dv)) <= det_tol) if p == q else (np.abs(dv).max() <= det_tol)
        if degenerate:
            raise DegenerateDerivative(f"F'({lam}) is singular")
    common = poly_from_roots(points)
    out = []
    for row in F.entries:
        new_row = []
        for e in row:
            if e.is_zero():
                new_row.append(e)
                continue
            quo, _ = P.polydiv(e.num, common)
            new_row.append(ScalarRational(quo, e.den))
        out.append(new_row)
    return RationalMatrix(out)
