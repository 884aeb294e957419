"""Matrix Nevanlinna-Pick interpolation on the unit disk.

Find a rational ``Phi`` analytic on the disk with ``sup |Phi| < 1`` that
meets tangential conditions ``xi* Phi(alpha) = eta*`` at interior points,
value and first-derivative conditions ``Phi(lam) = F``, ``Phi'(lam) = G``
at points of the unit circle, and optionally ``Phi(0) = 0``.

The solver is a Schur-type recursion. Each interior step peels one
tangential condition off with a J-unitary linear fractional map and a
Blaschke factor; each boundary step peels one boundary point off with the
factor ``kappa_eps(w) = (w - lam) / (lam ((1 + eps) - conj(lam) w))``, which
vanishes at ``lam`` and has its pole just outside the circle. A point that
carried a derivative re-enters the next level as a value-only condition,
and a value-only point leaves the problem after one step. When nothing is
left the zero function solves the reduced problem, and the recorded maps
are applied in reverse.

Functions of the disk variable ``w`` are carried internally as
discrete-time realizations ``T(z)`` with ``Phi(w) = T(1/w)``, so that
``sup_disk |Phi| = sup_circle |T|`` and all poles of ``T`` sit inside the
unit circle. :func:`solve` converts the result back to a
:class:`~regsyn.rational.RationalMatrix` in ``w``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotSolvable, NumericalBreakdown
from .linalg import is_positive_definite, opnorm, tangential_blocks
from .rational import ScalarRational, hinf_norm_exterior
from .realization import StateSpace, mobius, realify, series, to_rational

BOUNDARY_TOL = 1e-9
EPS_FRACTION = 0.5
# (eps fraction, boundary ordering) tried in turn until the coefficient form
# of the solution passes the residual checks
STRATEGIES = ((0.5, "given"), (0.5, "greedy"), (0.25, "given"), (0.75, "given"),
              (0.5, "reversed"), (0.25, "greedy"))
INTERIOR_RESIDUAL_TOL = 1e-8
BOUNDARY_VALUE_TOL = 1e-6
BOUNDARY_DERIVATIVE_TOL = 1e-5

__all__ = [
    "InteriorDatum", "BoundaryDatum", "InterpolationProblem", "pick_matrix",
    "solvable", "interior_step", "boundary_step", "solve",
    "tangential_to_matrix", "without_zero_at_origin", "residuals",
    "realization_residuals", "solve_realization",
]


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=complex)).reshape(-1)


@dataclass(frozen=True)
class InteriorDatum:
    """Tangential condition ``xi* Phi(alpha) = eta*`` at ``|alpha| < 1``."""

    alpha: complex
    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "xi", _vec(self.xi))
        object.__setattr__(self, "eta", _vec(self.eta))
        if abs(self.alpha) >= 1.0 - BOUNDARY_TOL:
            raise ValueError(f"interior point {self.alpha} is not inside the disk")
        if not np.linalg.norm(self.xi) > np.linalg.norm(self.eta):
            raise ValueError("tangential data need |xi| > |eta|")


@dataclass(frozen=True)
class BoundaryDatum:
    """Value ``F`` (and derivative ``G`` unless ``None``) at ``|lam| = 1``."""

    lam: complex
    F: np.ndarray
    G: np.ndarray = None

    def __post_init__(self):
        lam = complex(self.lam)
        if abs(abs(lam) - 1.0) >= BOUNDARY_TOL:
            raise ValueError(f"boundary point {lam} is not on the unit circle")
        object.__setattr__(self, "lam", lam / abs(lam))
        F = np.atleast_2d(np.asarray(self.F, dtype=complex))
        object.__setattr__(self, "F", F)
        if self.G is not None:
            G = np.atleast_2d(np.asarray(self.G, dtype=complex))
            if G.shape != F.shape:
                raise ValueError("value and derivative shapes differ")
            object.__setattr__(self, "G", G)
        if not opnorm(F) < 1.0:
            raise ValueError("boundary values need |F| < 1")


@dataclass(frozen=True)
class InterpolationProblem:
    """Interior, boundary and zero-at-origin conditions for a ``p x q`` function."""

    p: int
    q: int
    interior: tuple = ()
    boundary: tuple = ()
    zero_at_origin: bool = False

    def __post_init__(self):
        object.__setattr__(self, "interior", tuple(self.interior))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        for d in self.interior:
            if d.xi.size != self.p or d.eta.size != self.q:
                raise ValueError("interior datum does not match (p, q)")
        for d in self.boundary:
            if d.F.shape != (self.p, self.q):
                raise ValueError("boundary datum does not match (p, q)")
        alphas = [d.alpha for d in self.interior]
        lams = [d.lam for d in self.boundary]
        for pts in (alphas, lams):
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    if abs(pts[i] - pts[j]) < 1e-12:
                        raise ValueError("interpolation points must be distinct")
        if self.zero_at_origin and any(abs(a) < 1e-14 for a in alphas):
            raise ValueError("zero-at-origin forbids an interior point at 0")

    @property
    def empty(self):
        return not self.interior and not self.boundary


def tangential_to_matrix(xi, eta):
    """Matrix value ``xi eta* / |xi|^2`` matching a tangential boundary condition."""
    xi, eta = _vec(xi), _vec(eta)
    return np.outer(xi, eta.conj()) / np.vdot(xi, xi).real


def pick_matrix(interior, zero_at_origin=False):
    """Pick matrix of the interior data (with the zero-at-origin variant)."""
    n = len(interior)
    P = np.zeros((n, n), dtype=complex)
    for j, dj in enumerate(interior):
        for l, dl in enumerate(interior):
            xx = np.vdot(dj.xi, dl.xi)
            ee = np.vdot(dj.eta, dl.eta)
            if zero_at_origin:
                xx = xx * dj.alpha * dl.alpha.conjugate()
            P[j, l] = (xx - ee) / (1.0 - dj.alpha * dl.alpha.conjugate())
    return 0.5 * (P + P.conj().T)


def solvable(problem, tol=1e-9):
    """Solvability test; boundary data never matter."""
    if not problem.interior:
        return True
    P = pick_matrix(problem.interior, problem.zero_at_origin)
    return is_positive_definite(P, tol * max(1.0, np.abs(P).max()))


def without_zero_at_origin(problem):
    """Equivalent problem for ``Phi(w) / w`` without the zero-at-origin flag."""
    if not problem.zero_at_origin:
        return problem
    if not solvable(problem):
        raise NotSolvable("Pick matrix (zero-at-origin form) is not positive definite")
    interior = [InteriorDatum(d.alpha, d.alpha.conjugate() * d.xi, d.eta)
                for d in problem.interior]
    boundary = [BoundaryDatum(d.lam, d.F / d.lam,
                              None if d.G is None else d.G / d.lam - d.F / d.lam ** 2)
                for d in problem.boundary]
    return InterpolationProblem(problem.p, problem.q, interior, boundary, False)


# -- recursion records -------------------------------------------------------

def _blaschke_z(alpha):
    """``kappa(1/z)`` for the interior Blaschke factor, as a rational in ``z``."""
    if abs(alpha) == 0.0:
        return ScalarRational([1.0], [0.0, 1.0])
    u = abs(alpha) / alpha
    return ScalarRational([u, -u * alpha], [-alpha.conjugate(), 1.0])


@dataclass(frozen=True)
class InteriorRecord:
    """Data needed to undo one interior step."""

    alpha: complex
    E: np.ndarray
    blocks: tuple
    nu: np.ndarray

    def kappa(self, w):
        a = self.alpha
        if a == 0:
            return w
        return (abs(a) / a) * (w - a) / (1.0 - a.conjugate() * w)

    def kappa_derivative(self, w):
        a = self.alpha
        if a == 0:
            return 1.0
        return (abs(a) / a) * (1.0 - abs(a) ** 2) / (1.0 - a.conjugate() * w) ** 2

    @property
    def projector(self):
        v = self.nu / np.linalg.norm(self.nu)
        return np.outer(v, v.conj())

    def X(self, w):
        Pi = self.projector
        return np.eye(Pi.shape[0]) + (self.kappa(w) - 1.0) * Pi

    def X_derivative(self, w):
        return self.kappa_derivative(w) * self.projector

    def X_realization(self):
        k = StateSpace.scalar(_blaschke_z(self.alpha))
        v = (self.nu / np.linalg.norm(self.nu)).reshape(-1, 1)
        Pi = v @ v.conj().T
        p = Pi.shape[0]
        return StateSpace(k.A, k.B @ v.conj().T, v @ k.C,
                          np.eye(p) + (k.D[0, 0] - 1.0) * Pi)

    def apply(self, phi):
        """Parent solution ``T_{-E}(X phi)`` from a solution of the reduced problem."""
        A, B, C, D = self.blocks
        return mobius(A, B, C, D, series(self.X_realization(), phi))


@dataclass(frozen=True)
class BoundaryRecord:
    """Data needed to undo one boundary step."""

    lam: complex
    F: np.ndarray
    blocks: tuple
    eps: float

    def kappa(self, w):
        return (w - self.lam) / (self.lam * ((1.0 + self.eps) - self.lam.conjugate() * w))

    def kappa_derivative(self, w):
        return self.eps / (self.lam * ((1.0 + self.eps) - self.lam.conjugate() * w) ** 2)

    def kappa_z(self):
        lam, eps = self.lam, self.eps
        return ScalarRational([1.0 / lam, -1.0], [-lam.conjugate(), 1.0 + eps])

    def apply(self, psi):
        """Parent solution ``T_F^{-1}(kappa_eps psi)``."""
        A, B, C, D = self.blocks
        p, q = psi.shape
        if q <= p:
            scaled = series(psi, StateSpace.scalar(self.kappa_z(), q))
        else:
            scaled = series(StateSpace.scalar(self.kappa_z(), p), psi)
        return mobius(A, B, C, D, scaled)


def _T(blocks, X):
    A, B, C, D = blocks
    return (A @ X + B) @ np.linalg.inv(C @ X + D)


def interior_step(problem):
    """Remove the first interior condition.

    Returns
    -------
    reduced : InterpolationProblem
    record : InteriorRecord
        ``record.apply(phi)`` maps a solution of ``reduced`` (as a
        realization in ``z = 1/w``) to a solution of ``problem``.

    Raises
    ------
    NotSolvable
        If the Pick matrix is not positive definite.
    """
    if problem.zero_at_origin:
        problem = without_zero_at_origin(problem)
    if not problem.interior:
        raise ValueError("no interior condition to remove")
    if not solvable(problem):
        raise NotSolvable("Pick matrix is not positive definite")
    first, rest = problem.interior[0], problem.interior[1:]
    E = np.outer(first.xi, first.eta.conj()) / np.vdot(first.xi, first.xi).real
    blocks = tangential_blocks(E)
    A, B, C, D = blocks
    nu = A @ first.xi + B @ first.eta
    if np.linalg.norm(nu) <= 1e-14 * np.linalg.norm(first.xi):
        raise NotSolvable("degenerate tangential direction")
    rec = InteriorRecord(first.alpha, E, blocks, nu)

    interior = []
    for d in rest:
        U = A @ d.xi + B @ d.eta
        V = C @ d.xi + D @ d.eta
        interior.append(InteriorDatum(d.alpha, rec.X(d.alpha).conj().T @ U, V))
    boundary = []
    for d in problem.boundary:
        Xl = rec.X(d.lam)
        Xinv = Xl.conj().T
        Fh = Xinv @ _T(blocks, d.F)
        Gh = None
        if d.G is not None:
            Gh = (Xinv @ np.linalg.solve(A + d.F @ C, d.G) @ (-C @ Xl @ Fh + D)
                  - Xinv @ rec.X_derivative(d.lam) @ Fh)
        boundary.append(BoundaryDatum(d.lam, Fh, Gh))
    return InterpolationProblem(problem.p, problem.q, interior, boundary, False), rec


def _eps_bound(first, blocks, rest, mapped):
    A, _, _, D = blocks
    bounds = []
    if first.G is not None:
        g = opnorm(first.G) * opnorm(A) * opnorm(D)
        if g > 0:
            bounds.append(1.0 / g)
    for d, Tf in zip(rest, mapped):
        nt = opnorm(Tf)
        if nt > 0:
            bounds.append(abs(d.lam - first.lam) * (1.0 / nt - 1.0))
    return min(bounds) if bounds else 2.0


def _reorder_boundary(problem):
    best, best_eps = 0, -1.0
    for i, first in enumerate(problem.boundary):
        rest = problem.boundary[:i] + problem.boundary[i + 1:]
        blocks = tangential_blocks(first.F)
        e = _eps_bound(first, blocks, rest, [_T(blocks, d.F) for d in rest])
        if e > best_eps:
            best, best_eps = i, e
    b = list(problem.boundary)
    b.insert(0, b.pop(best))
    return InterpolationProblem(problem.p, problem.q, (), b, False)


def boundary_step(problem, eps=None, eps_fraction=EPS_FRACTION):
    """Remove the first boundary point (interior list must be empty).

    Parameters
    ----------
    problem : InterpolationProblem
    eps : float, optional
        Pole offset of ``kappa_eps``. Defaults to ``eps_fraction`` times the
        admissible bound.
    eps_fraction : float
        Fraction of the admissible bound used when ``eps`` is not given.

    Returns
    -------
    reduced : InterpolationProblem
    record : BoundaryRecord
    """
    if problem.zero_at_origin:
        problem = without_zero_at_origin(problem)
    if problem.interior:
        raise ValueError("interior conditions must be removed first")
    if not problem.boundary:
        raise ValueError("no boundary condition to remove")
    first, rest = problem.boundary[0], problem.boundary[1:]
    blocks = tangential_blocks(first.F)
    mapped = [_T(blocks, d.F) for d in rest]
    if eps is None:
        eps = eps_fraction * _eps_bound(first, blocks, rest, mapped)
    A, B, C, D = blocks
    rec = BoundaryRecord(first.lam, first.F, blocks, float(eps))

    boundary = []
    if first.G is not None:
        boundary.append(BoundaryDatum(first.lam, eps * first.lam * (A @ first.G @ D), None))
    for d, Tf in zip(rest, mapped):
        k = rec.kappa(d.lam)
        Fh = Tf / k
        Gh = None
        if d.G is not None:
            Gh = ((A - k * Fh @ C) @ d.G @ np.linalg.inv(C @ d.F + D) / k
                  - rec.kappa_derivative(d.lam) / k * Fh)
        boundary.append(BoundaryDatum(d.lam, Fh, Gh))
    return InterpolationProblem(problem.p, problem.q, (), boundary, False), rec


def _close(a, b, tol):
    if a is None or b is None:
        return a is None and b is None
    return np.allclose(np.conj(a), b, atol=tol, rtol=0)


def _conjugate_closed(problem, tol=1e-12):
    """True if the data set is invariant under complex conjugation."""
    for d in problem.interior:
        if not any(_close(d.alpha, e.alpha, tol) and _close(d.xi, e.xi, tol)
                   and _close(d.eta, e.eta, tol) for e in problem.interior):
            return False
    for d in problem.boundary:
        if not any(_close(d.lam, e.lam, tol) and _close(d.F, e.F, tol)
                   and _close(d.G, e.G, tol) for e in problem.boundary):
            return False
    return True


def residuals(Phi, problem):
    """Worst interior, boundary value and boundary derivative residuals.

    ``Phi`` is a :class:`~regsyn.rational.RationalMatrix` in the disk variable.
    """
    interior = 0.0
    for d in problem.interior:
        r = d.xi.conj() @ Phi(d.alpha) - d.eta.conj()
        interior = max(interior, float(np.linalg.norm(r)))
    value = deriv = 0.0
    for d in problem.boundary:
        value = max(value, opnorm(Phi(d.lam) - d.F))
        if d.G is not None:
            deriv = max(deriv, opnorm(Phi.derivative_at(d.lam) - d.G))
    origin = opnorm(Phi(0.0)) if problem.zero_at_origin else 0.0
    return {"interior": interior, "boundary_value": value,
            "boundary_derivative": deriv, "origin": origin}


def realization_residuals(T, problem):
    """Residuals of ``Phi(w) = T(1/w)`` evaluated through the realization.

    Same keys as :func:`residuals`. Derivatives use
    ``Phi'(w) = -T'(1/w) / w**2``.
    """
    interior = 0.0
    for d in problem.interior:
        r = d.xi.conj() @ T(1.0 / d.alpha) - d.eta.conj()
        interior = max(interior, float(np.linalg.norm(r)))
    value = deriv = 0.0
    for d in problem.boundary:
        z = 1.0 / d.lam
        value = max(value, opnorm(T(z) - d.F))
        if d.G is not None:
            deriv = max(deriv, opnorm(-T.derivative(z) * z ** 2 - d.G))
    origin = opnorm(T.D) if problem.zero_at_origin else 0.0
    return {"interior": interior, "boundary_value": value,
            "boundary_derivative": deriv, "origin": origin}


def solve(problem, margin=1e-9, grid_points=4096, full_output=False):
    """Solve the interpolation problem.

    Parameters
    ----------
    problem : InterpolationProblem
    margin : float
        The solution must satisfy ``max |Phi| < 1 - margin`` on the circle grid.
    grid_points : int
        Size of the circle grid used for the norm check.
    full_output : bool
        Also return a dict with the realization ``T`` (``Phi(w) = T(1/w)``),
        the achieved norm, the residuals and the pole offsets used.

    Returns
    -------
    Phi : RationalMatrix
        Rational function of the disk variable.

    Raises
    ------
    NotSolvable
        If the Pick matrix is not positive definite.
    NumericalBreakdown
        If the reconstructed function fails the norm or residual checks.
    """
    Phi, info = _run(problem, margin, grid_points, "rational")
    return (Phi, info) if full_output else Phi


def solve_realization(problem, margin=1e-9, grid_points=4096, strategies=STRATEGIES):
    """Solve the interpolation problem and return the state-space solution.

    The residuals are checked on the realization ``T`` itself rather than
    on polynomial coefficients. Solutions with poles very close to the
    circle are accurate in this form even when their monomial coefficients
    are not, so callers that only evaluate or cascade the interpolant
    should prefer this entry point.

    strategies : sequence of (float, str)
        Pole-offset fractions and boundary orderings to try, in order.

    Returns
    -------
    T : StateSpace
        Realization with ``Phi(w) = T(1/w)``.
    info : dict
        Norm, residuals, pole offsets and the strategy used.
    """
    _, info = _run(problem, margin, grid_points, "realization", strategies)
    return info["realization"], info


def _run(problem, margin, grid_points, validate, strategies=STRATEGIES):
    if not solvable(problem):
        raise NotSolvable("Pick matrix is not positive definite")
    failures = []
    for fraction, order in strategies:
        try:
            Phi, info = _attempt(problem, fraction, order, margin, grid_points, validate)
        except NumericalBreakdown as exc:
            failures.append(f"[{fraction}, {order}] {exc}")
            continue
        info["strategy"] = (fraction, order)
        return Phi, info
    raise NumericalBreakdown("; ".join(failures))


def _attempt(problem, fraction, order, margin, grid_points, validate="rational"):
    work = without_zero_at_origin(problem)
    records = []
    while work.interior:
        work, rec = interior_step(work)
        records.append(rec)
    if order == "reversed":
        work = InterpolationProblem(work.p, work.q, (), work.boundary[::-1], False)
    while work.boundary:
        if order == "greedy":
            work = _reorder_boundary(work)
        work, rec = boundary_step(work, eps_fraction=fraction)
        records.append(rec)

    T = StateSpace.static(np.zeros((problem.p, problem.q)))
    for rec in reversed(records):
        T = rec.apply(T)
    if problem.zero_at_origin:
        T = T.delay()
    real = _conjugate_closed(problem)
    if real:
        T = realify(T)

    norm = hinf_norm_exterior(T, grid_points) if T.order else opnorm(T.D)
    if not norm < 1.0 - margin:
        raise NumericalBreakdown(f"reconstructed function has circle norm {norm:.12g}")
    if validate == "realization":
        Phi = None
        res = realization_residuals(T, problem)
    else:
        Phi = to_rational(T).reciprocal_argument()
        if real:
            Phi = Phi.real_coefficients()
        res = residuals(Phi, problem)
    if (res["interior"] > INTERIOR_RESIDUAL_TOL or res["boundary_value"] > BOUNDARY_VALUE_TOL
            or res["boundary_derivative"] > BOUNDARY_DERIVATIVE_TOL
            or res["origin"] > INTERIOR_RESIDUAL_TOL):
        raise NumericalBreakdown(f"interpolation residuals too large: {res}")
    eps = [r.eps for r in records if isinstance(r, BoundaryRecord)]
    return Phi, {"realization": T, "norm": norm, "residuals": res, "eps": eps,
                 "real": real, "steps": len(records)}
