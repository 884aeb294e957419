"""Finite-dimensional regulating controllers from boundary interpolation.

The design runs in nine steps:

1. left coprime factors ``G+ = D+^{-1} N+`` of the unstable part,
2. a bound ``M`` above the smallest norm of a stabilizing ``Y+``,
3. ``M1 = max(2 delta*, M)``,
4. a rational ``R`` close to the stable part,
5. ``Y+`` from a Nevanlinna-Pick problem with interior conditions at the
   unstable poles and boundary conditions at the exosystem frequencies,
6. ``Z+ = D+^{-1} (I - N+ Y+)``,
7. ``Zhat+`` with the boundary zeros of ``Z+ - R Y+`` factored out,
8. the split ``K = K1 K2`` with ``K1`` carrying the internal model,
9. the cascade realization of ``K1 K2``.

For scalar plants the shortcut builds ``K = Y+ D+ / (1 - (N+ + D+ R) Y+)``
directly and realizes it in companion form, skipping steps 6 to 8 (only
the boundary value condition is imposed).

Every rational object that takes part in products and inverses is carried
as a :class:`~regsyn.realization.StateSpace` in ``z``. Pole-zero
cancellations that exact arithmetic would perform are done by splitting
off the cancelled modes with a Schur decomposition and checking that their
contribution is negligible.

Two pipelines are provided: :func:`synthesize_delay` for scalar delay
plants under sampled-data feedback with constant signals, and
:func:`synthesize_discrete` for finite-dimensional discrete-time plants.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from . import nevanlinna as nv
from .errors import (AssumptionViolated, BoundaryConditionTooLarge, DegreeCapExceeded,
                     InternalModelMissing, InterpolationResidualTooLarge,
                     NotSolvable, NumericalBreakdown, PBHFailure, RegsynError,
                     RepeatedUnstablePole, Singular, SingularAtBoundary)
from .linalg import kernel_vector, opnorm
from .rational import (CLUSTER_TOL, RationalMatrix, ScalarRational, _match_roots,
                       hinf_norm_exterior, poly_from_roots, root_multiplicities)
from .realization import StateSpace, from_rational, minreal, to_rational

DEFAULT_A = 0.9
M_ITERATIONS = 8
M_FACTOR = 1.1
M_FLOOR = 1.0
INTERIOR_TOL = nv.INTERIOR_RESIDUAL_TOL
BOUNDARY_VALUE_TOL = nv.BOUNDARY_VALUE_TOL
BOUNDARY_DERIVATIVE_TOL = nv.BOUNDARY_DERIVATIVE_TOL
BEZOUT_TOL = 1e-8
CANCEL_TOL = 1e-6
# K2 only shapes the loop: the internal model sits exactly in P1 and the
# closed loop is checked separately, so the cancellation at the exosystem
# frequencies is allowed a looser relative tolerance
BOUNDARY_CANCEL_TOL = 1e-4
INTERNAL_MODEL_TOL = 1e-8
PBH_TOL = 1e-9

__all__ = [
    "DiscretePlant", "CoprimePair", "DiscreteController", "SynthesisReport",
    "coprime_factorize", "delta_star", "stabilization_bound_M",
    "assemble_interpolation", "build_controller", "taylor_approximant",
    "closed_loop_stability_check", "steady_state", "bezout_residual",
    "check_discrete_assumptions", "synthesize_delay", "synthesize_discrete",
    "split_modes", "reduce",
]


# -- conversions -----------------------------------------------------------

def _as_ss(F, p=None):
    """Realization of a constant, scalar rational, rational matrix or system."""
    if isinstance(F, StateSpace):
        return F
    if isinstance(F, ScalarRational):
        return StateSpace.scalar(F, p or 1)
    if isinstance(F, RationalMatrix):
        if F.shape == (1, 1) and p and p > 1:
            return StateSpace.scalar(F[0, 0], p)
        return from_rational(F)
    M = np.asarray(F, dtype=complex)
    if M.ndim == 0:
        M = M * np.eye(p or 1)
    return StateSpace.static(M)


def _as_scalar(F):
    """Scalar rational form of a ``1 x 1`` object."""
    if isinstance(F, ScalarRational):
        return F
    if isinstance(F, RationalMatrix):
        return F[0, 0]
    if isinstance(F, StateSpace):
        return to_rational(F)[0, 0]
    return ScalarRational([complex(np.asarray(F).reshape(-1)[0])])


def _real_if_close(M, tol=1e-10):
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.abs(M.imag).max(initial=0.0) <= tol * max(1.0, np.abs(M).max(initial=0.0)):
        return M.real.copy()
    return M


def _circle(radius, points=64):
    return radius * np.exp(2j * np.pi * np.arange(points) / points)


def split_modes(G, select, tol=CANCEL_TOL, probe=None):
    """Remove the modes of ``G`` selected by ``select(eig)``.

    The state matrix is brought to Schur form with the selected eigenvalues
    leading, the two diagonal blocks are decoupled by a Sylvester equation,
    and the selected part is dropped after checking that it contributes
    less than ``tol`` (relative) on the probe points.

    Returns
    -------
    kept : StateSpace
    dropped_gain : float
        Largest norm of the removed part on the probe points, relative to
        the largest norm of ``G`` there.

    Raises
    ------
    NumericalBreakdown
        If the selected part is not negligible.
    """
    n = G.order
    if n == 0:
        return G, 0.0
    eig = np.linalg.eigvals(G.A)
    k = int(sum(bool(select(e)) for e in eig))
    if k == 0:
        return G, 0.0
    symmetric = all(bool(select(e)) == bool(select(np.conj(e))) for e in eig)
    if symmetric and G.is_real(tol=0.0):
        # a conjugate-symmetric selection keeps real data real
        T, Z, sdim = scipy.linalg.schur(G.A.real, output="real",
                                        sort=lambda x, y: bool(select(complex(x, y))))
        G = G.real()
    else:
        T, Z, sdim = scipy.linalg.schur(G.A.astype(complex), output="complex",
                                        sort=lambda e: bool(select(e)))
    A11, A12, A22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
    X = scipy.linalg.solve_sylvester(A11, -A22, -A12) if sdim < n else np.zeros((sdim, 0))
    Bt = Z.conj().T @ G.B
    Ct = G.C @ Z
    B1 = Bt[:sdim] - X @ Bt[sdim:]
    C1 = Ct[:, :sdim]
    C2 = Ct[:, sdim:] + C1 @ X
    kept = StateSpace(A22, Bt[sdim:], C2, G.D)
    removed = StateSpace(A11, B1, C1, np.zeros_like(G.D))
    if probe is None:
        rad = 2.0 + 2.0 * float(np.abs(eig).max())
        probe = _circle(rad, 32)
    full = max(opnorm(G(z)) for z in probe)
    part = max(opnorm(removed(z)) for z in probe)
    rel = part / max(full, 1e-300)
    if rel > tol:
        raise NumericalBreakdown(
            f"{sdim} mode(s) expected to cancel carry relative gain {rel:.3e}")
    return kept, rel


def reduce(G, tols=(1e-9, 1e-8, 1e-7, 1e-6), match=1e-8):
    """Lowest-order :func:`minreal` reduction that still reproduces ``G``.

    Each tolerance yields a candidate; a candidate is accepted when its
    transfer function agrees with ``G`` to ``match`` (relative) on two
    probe circles away from the poles.
    """
    if G.order == 0:
        return G
    eig = np.abs(np.linalg.eigvals(G.A))
    probe = np.concatenate([_circle(1.0 + 0.5 * (1.0 + eig.max()), 24), _circle(1.13, 24)])
    probe = probe[[np.abs(np.linalg.eigvals(G.A) - z).min() > 1e-3 for z in probe]]
    ref = [G(z) for z in probe]
    scale = max(max(opnorm(v) for v in ref), 1e-300)
    best = G
    for tol in tols:
        cand = minreal(G, tol)
        if cand.order >= best.order:
            continue
        err = max(opnorm(cand(z) - v) for z, v in zip(probe, ref))
        if err <= match * scale:
            best = cand
    return best


# -- plants ----------------------------------------------------------------

@dataclass(frozen=True)
class DiscretePlant:
    """Finite-dimensional discrete-time plant ``x+ = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        n = A.shape[0]
        B = np.asarray(self.B).reshape(n, -1)
        C = np.asarray(self.C).reshape(-1, n)
        D = np.asarray(self.D).reshape(C.shape[0], B.shape[1])
        if A.shape != (n, n):
            raise ValueError("A must be square")
        for key, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, key, val)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.C.shape[0]

    def system(self):
        return StateSpace(self.A, self.B, self.C, self.D)

    def transfer(self, z):
        return self.system()(z)

    def split(self, radius=1.0):
        """Real Schur split into the part with ``|lambda| >= radius`` and the rest.

        Returns
        -------
        unstable, stable : StateSpace
            ``G+`` (strictly proper) and ``G-`` (carries ``D``).
        """
        real = not np.iscomplexobj(self.A) or np.abs(self.A.imag).max() == 0
        A = self.A.real if real else self.A.astype(complex)
        if real:
            T, Z, sdim = scipy.linalg.schur(A, output="real",
                                            sort=lambda x, y: x * x + y * y >= radius ** 2)
        else:
            T, Z, sdim = scipy.linalg.schur(A, output="complex",
                                            sort=lambda e: abs(e) >= radius)
        n = self.n
        A11, A12, A22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
        X = scipy.linalg.solve_sylvester(A11, -A22, -A12) if 0 < sdim < n else np.zeros((sdim, n - sdim))
        Bt = Z.conj().T @ self.B
        Ct = self.C @ Z
        B1 = Bt[:sdim] - X @ Bt[sdim:]
        C1 = Ct[:, :sdim]
        C2 = Ct[:, sdim:] + C1 @ X
        p, q = self.D.shape
        Gp = StateSpace(A11, B1, C1, np.zeros((p, q)))
        Gm = StateSpace(A22, Bt[sdim:], C2, self.D)
        return Gp, Gm


def check_discrete_assumptions(plant, thetas, radius_margin=1e-9):
    """Standing assumptions (a1)-(a7) for a finite-dimensional discrete plant.

    Returns
    -------
    dict
        One entry per label with ``ok`` and ``detail``.
    """
    rep = {}
    eig = np.linalg.eigvals(plant.A) if plant.n else np.zeros(0)
    lams = np.exp(1j * np.asarray(thetas, dtype=float))
    dist = min((np.abs(eig - l).min(initial=np.inf) for l in lams), default=np.inf)
    rep["a1"] = {"ok": bool(dist > 1e-8), "detail": f"distance of exp(i theta) to spectrum {dist:.3e}"}
    if rep["a1"]["ok"]:
        worst = min(abs(np.linalg.det(np.atleast_2d(plant.transfer(l)))) for l in lams)
        rep["a2"] = {"ok": bool(worst > 1e-10), "detail": f"min |det G(exp(i theta))| = {worst:.3e}"}
    else:
        rep["a2"] = {"ok": False, "detail": "G undefined at an exosystem frequency"}
    rep["a3"] = {"ok": True, "detail": "finite-dimensional state space"}
    rep["a4"] = {"ok": True, "detail": "spectral (Schur) decomposition is invariant"}
    inside = eig[np.abs(eig) < 1.0]
    eta0 = float(np.abs(inside).max()) if inside.size else 0.0
    rep["a5"] = {"ok": bool(eta0 < 1.0 - radius_margin), "detail": f"stable part radius {eta0:.6g}"}
    unstable = eig[np.abs(eig) >= 1.0]
    Ap = plant.split()[0]
    if Ap.order:
        ctrb = np.linalg.matrix_rank(np.hstack([np.linalg.matrix_power(Ap.A, k) @ Ap.B
                                                for k in range(Ap.order)]), tol=1e-9)
        obsv = np.linalg.matrix_rank(np.vstack([Ap.C @ np.linalg.matrix_power(Ap.A, k)
                                                for k in range(Ap.order)]), tol=1e-9)
        ok6 = ctrb == Ap.order and obsv == Ap.order
    else:
        ok6 = True
    rep["a6"] = {"ok": bool(ok6), "detail": "(A+, B+, C+) controllable and observable"
                 if ok6 else "unstable part not minimal"}
    simple = all(m == 1 for _, m in root_multiplicities(unstable, CLUSTER_TOL))
    rep["a7"] = {"ok": bool(simple), "detail": f"{unstable.size} unstable eigenvalue(s), "
                 + ("all simple" if simple else "repeated")}
    return rep


# -- step 1: coprime factors -----------------------------------------------

@dataclass(frozen=True)
class CoprimePair:
    """Left coprime factors ``G+ = D^{-1} N`` with the unstable zeros of ``det D``.

    ``N`` and ``D`` are rational matrices; ``N_ss`` and ``D_ss`` realize
    them. ``psi[r]`` spans the kernel of ``D(chi[r])*``.
    """

    N: RationalMatrix
    D: RationalMatrix
    N_ss: StateSpace
    D_ss: StateSpace
    chi: np.ndarray
    psi: tuple
    a: float

    @property
    def p(self):
        return self.D.shape[0]

    def verify(self, Gplus, points=64, radius=2.5):
        """Largest ``|D^{-1} N - G+|`` on a circle outside the unstable poles."""
        G = _as_ss(Gplus, self.p)
        rad = max(radius, 1.5 * float(np.abs(self.chi).max(initial=1.0)))
        worst = 0.0
        for z in _circle(rad, points):
            lhs = np.linalg.solve(self.D_ss(z), self.N_ss(z))
            worst = max(worst, opnorm(lhs - G(z)))
        return worst


def _scalar_coprime(g, a):
    rts = g.poles()
    if np.any(np.abs(rts) < 1.0 - 1e-12):
        raise ValueError("G+ must have all its poles in |z| >= 1")
    if any(m > 1 for _, m in root_multiplicities(rts, CLUSTER_TOL)):
        raise RepeatedUnstablePole(f"G+ has a repeated pole among {rts}")
    ups = len(rts)
    base = poly_from_roots([a] * ups)
    D = ScalarRational(g.den, base, cancel_tol=0)
    N = ScalarRational(g.num, base, cancel_tol=0)
    psi = tuple(np.ones(1, dtype=complex) for _ in rts)
    return CoprimePair(RationalMatrix.scalar(N), RationalMatrix.scalar(D),
                       StateSpace.scalar(N), StateSpace.scalar(D), np.asarray(rts), psi, a)


def _observer_gain(A, C, a):
    n = A.shape[0]
    real = np.abs(A.imag).max(initial=0.0) == 0 and np.abs(C.imag).max(initial=0.0) == 0
    if real:
        # distinct real poles around a; place_poles needs multiplicity <= rank C
        poles = np.clip(a + 0.05 * (np.arange(n) - (n - 1) / 2.0), -0.95, 0.95)
        res = scipy.signal.place_poles(A.real.T, C.real.T, poles)
        return res.gain_matrix.T
    # complex data: an observer gain from the discrete Riccati equation
    X = scipy.linalg.solve_discrete_are(A.conj().T, C.conj().T, np.eye(n), np.eye(C.shape[0]))
    S = C @ X @ C.conj().T + np.eye(C.shape[0])
    return A @ X @ C.conj().T @ np.linalg.inv(S)


def coprime_factorize(Gplus, a=DEFAULT_A):
    """Left coprime factorization of the unstable part over stable rationals.

    Scalar ``G+ = num / prod(z - chi)`` gives ``D+ = prod(z - chi) / (z - a)^U``
    and ``N+ = num / (z - a)^U``. A square ``G+ = C (zI - A)^{-1} B`` with
    ``p > 1`` gives the observer-based factors ``D+ = I - C (zI - A + LC)^{-1} L``
    and ``N+ = C (zI - A + LC)^{-1} B`` with the poles of ``A - LC`` placed
    around ``a``.

    Parameters
    ----------
    Gplus : ScalarRational, RationalMatrix or StateSpace
        Strictly proper, all poles in ``|z| >= 1`` and simple.
    a : float
        Auxiliary stable pole, ``-1 < a < 1``.

    Raises
    ------
    RepeatedUnstablePole
        If ``G+`` has a repeated pole.
    """
    if not -1.0 < a < 1.0:
        raise ValueError("a must lie in (-1, 1)")
    if isinstance(Gplus, StateSpace):
        p = Gplus.shape[0]
        if Gplus.shape[0] != Gplus.shape[1]:
            raise ValueError("G+ must be square")
        if p == 1:
            g = _as_scalar(Gplus) if Gplus.order else ScalarRational([0.0])
            return coprime_factorize(g, a)
        G = minreal(Gplus)
        if opnorm(G.D) > 1e-12:
            raise ValueError("G+ must be strictly proper")
        if G.order == 0:
            I = RationalMatrix.identity(p)
            return CoprimePair(RationalMatrix.zeros(p, p), I, StateSpace.static(np.zeros((p, p))),
                               StateSpace.static(np.eye(p)), np.zeros(0, dtype=complex), (), a)
        chi = np.linalg.eigvals(G.A)
        if np.any(np.abs(chi) < 1.0 - 1e-12):
            raise ValueError("G+ must have all its poles in |z| >= 1")
        if any(m > 1 for _, m in root_multiplicities(chi, CLUSTER_TOL)):
            raise RepeatedUnstablePole(f"G+ has a repeated pole among {chi}")
        L = _observer_gain(G.A, G.C, a)
        AL = G.A - L @ G.C
        D_ss = StateSpace(AL, -L, G.C, np.eye(p))
        N_ss = StateSpace(AL, G.B, G.C, np.zeros((p, p)))
        psi = tuple(kernel_vector(D_ss(c).conj().T, tol=1e-7) for c in chi)
        return CoprimePair(to_rational(N_ss), to_rational(D_ss), N_ss, D_ss, chi, psi, a)
    if isinstance(Gplus, RationalMatrix) and Gplus.shape != (1, 1):
        return coprime_factorize(from_rational(Gplus), a)
    g = _as_scalar(Gplus)
    if g.is_zero() or g.den_degree == 0:
        if not g.is_zero():
            raise ValueError("G+ must be strictly proper")
        one = ScalarRational([1.0])
        zero = ScalarRational([0.0])
        return CoprimePair(RationalMatrix.scalar(zero), RationalMatrix.scalar(one),
                           StateSpace.static(0.0), StateSpace.static(1.0),
                           np.zeros(0, dtype=complex), (), a)
    if not g.is_strictly_proper():
        raise ValueError("G+ must be strictly proper")
    return _scalar_coprime(g, a)


# -- step 2 and 3: delta*, M, M1 -------------------------------------------

def delta_star(pair, G_boundary, thetas=(0.0,)):
    """``max_l |(D+ G)(exp(i theta_l))^{-1}|``.

    Parameters
    ----------
    pair : CoprimePair
    G_boundary : sequence of array_like
        ``G`` (or ``G_tau``) evaluated at each ``exp(i theta_l)``.
    thetas : sequence of float

    Raises
    ------
    SingularAtBoundary
        If some ``(D+ G)(exp(i theta_l))`` is singular.
    """
    if np.ndim(G_boundary) < 3 and len(thetas) == 1:
        G_boundary = [G_boundary]
    worst = 0.0
    for th, G in zip(thetas, G_boundary):
        M = pair.D_ss(np.exp(1j * th)) @ np.atleast_2d(np.asarray(G, dtype=complex))
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= 1e-13 * max(1.0, s[0]):
            raise SingularAtBoundary(f"(D+ G)(exp(i {th})) is singular")
        worst = max(worst, 1.0 / s[-1])
    return float(worst)


def _interior_data(pair, M):
    data = []
    for c, psi in zip(pair.chi, pair.psi):
        if abs(abs(c) - 1.0) < nv.BOUNDARY_TOL:
            raise NotSolvable(f"unstable pole {c} on the unit circle is not supported")
        xi = pair.N_ss(c).conj().T @ psi
        # the tangential condition is homogeneous; unit xi keeps the Pick
        # test independent of the scale of N+
        s = np.linalg.norm(xi)
        if s == 0.0:
            raise NotSolvable(f"N+ vanishes along psi at the unstable pole {c}")
        data.append(nv.InteriorDatum(1.0 / c, xi / s, psi / (M * s)))
    return data


def _interior_feasible(pair, M):
    try:
        prob = nv.InterpolationProblem(pair.p, pair.p, _interior_data(pair, M), (), True)
    except ValueError:
        return False
    return nv.solvable(prob)


def stabilization_bound_M(pair, iterations=M_ITERATIONS, factor=M_FACTOR, floor=M_FLOOR,
                          override=None, full_output=False):
    """Upper estimate of the smallest norm of a stabilizing ``Y+``.

    The interior problem scaled by ``1/M`` is solvable exactly when some
    ``Y+`` with ``|Y+| < M`` (roughly) meets the interior conditions. A
    bracket is found by doubling, refined by bisection, and the smallest
    feasible candidate is multiplied by ``factor``. The result is never
    below ``floor``.

    Returns
    -------
    M : float
    info : dict, optional
        The bracket and whether the override was used.
    """
    info = {"override": override is not None}
    if override is not None:
        M = float(override)
        info["feasible"] = len(pair.chi) == 0 or _interior_feasible(pair, M)
        return (M, info) if full_output else M
    if len(pair.chi) == 0:
        info.update(lo=0.0, hi=0.0)
        return (max(floor, 1.0), info) if full_output else max(floor, 1.0)
    lo, hi = 0.0, 1.0
    while not _interior_feasible(pair, hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise NotSolvable("no feasible norm bound found for the interior conditions")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if _interior_feasible(pair, mid):
            hi = mid
        else:
            lo = mid
    info.update(lo=lo, hi=hi)
    M = max(factor * hi, floor)
    return (M, info) if full_output else M


# -- step 5: interpolation data --------------------------------------------

def _boundary_targets(pair, R, thetas, with_derivative):
    p = pair.p
    H = pair.N_ss + pair.D_ss @ _as_ss(R, p)
    out = []
    for th in thetas:
        z = np.exp(1j * th)
        Hz = H(z)
        try:
            W = np.linalg.inv(Hz)
        except np.linalg.LinAlgError as exc:
            raise SingularAtBoundary(f"(N+ + D+ R)(exp(i {th})) is singular") from exc
        Wd = -W @ (pair.D_ss(z) + H.derivative(z) @ W) if with_derivative else None
        out.append((th, z, W, Wd))
    return out


def assemble_interpolation(pair, R, M1, thetas=(0.0,), siso_shortcut=True, full_output=False):
    """Interpolation problem on the disk for ``Phi(w) = Y+(1/w) / M1``.

    ``Phi(0) = 0`` encodes strict properness of ``Y+``; interior data sit
    at ``1/chi_r`` with ``xi = N+(chi_r)* psi_r`` and ``eta = psi_r / M1``;
    boundary data sit at ``exp(-i theta_l)`` with value
    ``(N+ + D+ R)^{-1} / M1`` and, unless ``siso_shortcut``, derivative
    ``-Y+'(exp(i theta)) exp(2 i theta) / M1``.

    Raises
    ------
    BoundaryConditionTooLarge
        If a boundary value has norm ``>= M1``.
    """
    if siso_shortcut and pair.p != 1:
        raise ValueError("the scalar shortcut needs p = 1")
    interior = _interior_data(pair, M1)
    targets = _boundary_targets(pair, R, thetas, not siso_shortcut)
    boundary = []
    for th, z, W, Wd in targets:
        nW = opnorm(W)
        if nW >= M1:
            raise BoundaryConditionTooLarge(f"|Y+(exp(i {th}))| = {nW:.6g} >= M1 = {M1:.6g}")
        G = None if Wd is None else -Wd * z * z / M1
        boundary.append(nv.BoundaryDatum(np.conj(z), W / M1, G))
    prob = nv.InterpolationProblem(pair.p, pair.p, interior, boundary, True)
    if full_output:
        return prob, {"targets": targets}
    return prob


def interpolation_residuals(pair, R, Y, thetas=(0.0,), with_derivative=True):
    """Residuals of ``Y+`` (a realization in ``z``) against its conditions."""
    inter = 0.0
    for c, psi in zip(pair.chi, pair.psi):
        r = psi.conj() @ pair.N_ss(c) @ Y(c) - psi.conj()
        inter = max(inter, float(np.linalg.norm(r)))
    value = deriv = 0.0
    for th, z, W, Wd in _boundary_targets(pair, R, thetas, with_derivative):
        value = max(value, opnorm(Y(z) - W))
        if Wd is not None:
            deriv = max(deriv, opnorm(Y.derivative(z) - Wd))
    return {"interior": inter, "boundary_value": value, "boundary_derivative": deriv,
            "infinity": opnorm(Y.D)}


# -- steps 6 to 9: the controller ------------------------------------------

@dataclass
class DiscreteController:
    """Strictly causal controller ``xd+ = P xd + Q e``, ``yd = R xd``."""

    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    K: RationalMatrix = None
    method: str = ""

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P))
        n = self.P.shape[0]
        self.Q = np.asarray(self.Q).reshape(n, -1)
        self.R = np.asarray(self.R).reshape(-1, n)

    @property
    def order(self):
        return self.P.shape[0]

    @property
    def is_real(self):
        return not any(np.iscomplexobj(M) for M in (self.P, self.Q, self.R))

    def system(self):
        p, q = self.R.shape[0], self.Q.shape[1]
        return StateSpace(self.P, self.Q, self.R, np.zeros((p, q)))

    def transfer(self, z):
        return self.system()(z)

    def internal_model(self, thetas=(0.0,)):
        """Distance of ``exp(i theta)`` to the spectrum and its geometric multiplicity."""
        out = []
        eig = np.linalg.eigvals(self.P) if self.order else np.zeros(0)
        for th in thetas:
            lam = np.exp(1j * th)
            dist = float(np.abs(eig - lam).min(initial=np.inf))
            if self.order:
                s = np.linalg.svd(lam * np.eye(self.order) - self.P, compute_uv=False)
                geo = int(np.sum(s <= 1e-7 * max(1.0, s[0])))
            else:
                geo = 0
            out.append({"theta": float(th), "distance": dist, "geometric_multiplicity": geo})
        return out


@dataclass
class SynthesisReport:
    """Numbers produced along the design procedure."""

    delta_star: float = float("nan")
    M: float = float("nan")
    M1: float = float("nan")
    path: str = ""
    thresholds: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    assumptions: dict = field(default_factory=dict)
    interpolation: dict = field(default_factory=dict)
    status: str = "pending"

    def to_dict(self):
        return {"status": self.status, "path": self.path, "delta_star": self.delta_star,
                "M": self.M, "M1": self.M1, "thresholds": self.thresholds,
                "residuals": self.residuals, "stability": self.stability,
                "assumptions": self.assumptions, "interpolation": self.interpolation}


def _check_residuals(res, M1, with_derivative):
    scale = max(1.0, M1)
    bad = []
    if res["interior"] > INTERIOR_TOL * scale:
        bad.append(f"interior {res['interior']:.3e}")
    if res["boundary_value"] > BOUNDARY_VALUE_TOL * scale:
        bad.append(f"boundary value {res['boundary_value']:.3e}")
    if with_derivative and res["boundary_derivative"] > BOUNDARY_DERIVATIVE_TOL * scale:
        bad.append(f"boundary derivative {res['boundary_derivative']:.3e}")
    if res["infinity"] > INTERIOR_TOL * scale:
        bad.append(f"Y+(inf) {res['infinity']:.3e}")
    if bad:
        raise InterpolationResidualTooLarge("; ".join(bad))


def _cancel_near_pairs(K, keep, tol=1e-6):
    """Cancel zero/pole pairs of ``K`` closer than ``tol``, sparing poles at ``keep``.

    The closed form leaves numerically split copies of common factors.
    Poles at the exosystem frequencies are the internal model and stay even
    when a genuine zero lies close by.
    """
    zs = list(K.zeros())
    ps = [q for q in K.poles() if np.abs(keep - q).min() > 1e-5]
    pairs = _match_roots(zs, ps, tol)
    if not pairs:
        return K
    P = np.polynomial.polynomial
    num = P.polydiv(K.num, poly_from_roots([z for z, _ in pairs]))[0]
    den = P.polydiv(K.den, poly_from_roots([q for _, q in pairs]))[0]
    return ScalarRational(num, den, cancel_tol=0)


def _siso_controller(pair, R, Y, thetas):
    y = _as_scalar(Y)
    n_, d_ = pair.N[0, 0], pair.D[0, 0]
    r = _as_scalar(_as_ss(R, 1)) if not isinstance(R, ScalarRational) else R
    P = np.polynomial.polynomial
    if not np.allclose(n_.den, d_.den, rtol=0, atol=1e-14):
        raise ValueError("scalar path needs N+ and D+ over a common denominator")
    dd = d_.den
    # K = yn dn rd / (dd rd yd - (nn rd + dn rn) yn), then divide out prod(z - chi)
    num = P.polymul(P.polymul(y.num, d_.num), r.den)
    den = P.polysub(P.polymul(P.polymul(dd, r.den), y.den),
                    P.polymul(P.polyadd(P.polymul(n_.num, r.den), P.polymul(d_.num, r.num)), y.num))
    common = poly_from_roots(pair.chi)
    qn, rn = P.polydiv(num, common)
    qd, rd = P.polydiv(den, common)
    for name, rem, full in (("numerator", rn, num), ("denominator", rd, den)):
        if np.abs(rem).max(initial=0.0) > 1e-7 * np.abs(full).max():
            raise NumericalBreakdown(f"unstable pole of G+ does not cancel in the {name} of K")
    K = _cancel_near_pairs(ScalarRational(qn, qd, cancel_tol=0), np.exp(1j * np.asarray(thetas)))
    real = (np.abs(K.num.imag).max() <= 1e-10 * np.abs(K.num).max()
            and np.abs(K.den.imag).max() <= 1e-10)
    if real:
        K = K.real_coefficients()
    if not K.is_strictly_proper():
        raise NumericalBreakdown("controller is not strictly proper")
    Pm, Qm, Rm = _siso_modal_form(K, np.exp(1j * np.asarray(thetas, dtype=float)))
    _pbh(Pm, Qm, Rm)
    ctrl = DiscreteController(Pm, Qm, Rm, RationalMatrix.scalar(K), "siso")
    probe = _circle(2.0, 16)
    mismatch = max(abs(ctrl.transfer(z)[0, 0] - K(z)) for z in probe)
    if mismatch > 1e-8 * max(1.0, max(abs(K(z)) for z in probe)):
        raise NumericalBreakdown(f"modal realization differs from K by {mismatch:.3e}")
    return ctrl


def _siso_modal_form(K, lams):
    """Minimal realization ``K = sum_l r_l / (z - lam_l) + K_rest``.

    The exosystem poles are split off by polynomial division so that ``P``
    carries them exactly instead of as computed companion eigenvalues.
    """
    P = np.polynomial.polynomial
    L = poly_from_roots(lams)
    q, rem = P.polydiv(K.den, L)
    if np.abs(rem).max(initial=0.0) > 1e-8 * np.abs(K.den).max():
        raise InternalModelMissing(f"denominator of K does not vanish at the exosystem poles "
                                   f"(remainder {np.abs(rem).max():.3e})")
    res, rest = [], K.num
    for l, lam in enumerate(lams):
        others = poly_from_roots(np.delete(lams, l))
        r = P.polyval(lam, K.num) / (P.polyval(lam, q) * P.polyval(lam, others))
        res.append(r)
        rest = P.polysub(rest, r * P.polymul(q, others))
    rest, rem = P.polydiv(rest, L)
    if np.abs(rem).max(initial=0.0) > 1e-8 * max(1.0, np.abs(K.num).max()):
        raise NumericalBreakdown(f"partial fraction remainder {np.abs(rem).max():.3e}")
    A1, B1, C1 = _modal_realization(lams, np.asarray(res))
    if len(q) > 1:
        Kr = ScalarRational(rest, q, cancel_tol=0)
        if not np.iscomplexobj(A1) and np.abs(Kr.num.imag).max() <= 1e-10 * np.abs(Kr.num).max() \
                and np.abs(Kr.den.imag).max() <= 1e-10:
            Kr = Kr.real_coefficients()
        ss = StateSpace.scalar(Kr)
        A2, B2, C2 = (_real_if_close(M) for M in (ss.A, ss.B, ss.C))
    else:
        A2, B2, C2 = np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0))
    Pm = scipy.linalg.block_diag(A1, A2)
    Qm = np.vstack([B1, B2])
    Rm = np.hstack([C1, C2])
    return _balance(Pm, Qm, Rm)


def _modal_realization(lams, weights, tol=1e-12):
    """Realization of ``sum_l w_l / (z - lam_l)`` with a single input.

    Conjugate pairs ``(lam, w), (conj lam, conj w)`` become real rotation
    blocks, so real data give a real realization with eigenvalues exact to
    rounding.
    """
    A, B, C, used = [], [], [], set()
    for l, (lam, w) in enumerate(zip(lams, weights)):
        if l in used:
            continue
        used.add(l)
        wtol = 1e-9 * max(1.0, abs(w))
        if abs(lam.imag) > tol:
            m = next((m for m in range(len(lams)) if m not in used
                      and abs(lams[m] - np.conj(lam)) < tol
                      and abs(weights[m] - np.conj(w)) < wtol), None)
            if m is not None:
                used.add(m)
                x, y = lam.real, lam.imag
                A.append(np.array([[x, -y], [y, x]]))
                B.append(np.array([[1.0], [0.0]]))
                C.append(np.array([[2 * w.real, -2 * w.imag]]))
                continue
        elif abs(w.imag) <= wtol:
            A.append(np.array([[lam.real]]))
            B.append(np.array([[1.0]]))
            C.append(np.array([[w.real]]))
            continue
        A.append(np.array([[lam]]))
        B.append(np.array([[1.0 + 0j]]))
        C.append(np.array([[w]]))
    return scipy.linalg.block_diag(*A), np.vstack(B), np.hstack(C)


def _balance(P, Q, R):
    """Diagonal power-of-two similarity that evens out the scaling of ``(P, Q, R)``."""
    n = P.shape[0]
    if n == 0:
        return P, Q, R
    m = max(Q.shape[1], R.shape[0])
    big = np.zeros((n + m, n + m))
    big[:n, :n] = np.abs(P)
    big[:n, n:n + Q.shape[1]] = np.abs(Q)
    big[n:n + R.shape[0], :n] = np.abs(R)
    _, (scale, _) = scipy.linalg.matrix_balance(big, permute=False, separate=True)
    t = scale[:n]
    return P * t[None, :] / t[:, None], Q / t[:, None], R * t[None, :]


def _k1_realization(thetas, a, p):
    lams = np.exp(1j * np.asarray(thetas, dtype=float))
    n = len(lams)
    c = []
    for l, lam in enumerate(lams):
        others = np.delete(lams, l)
        c.append((lam - a) ** n / np.prod(lam - others))
    A, B, C = _modal_realization(lams, np.asarray(c))
    I = np.eye(p)
    return np.kron(A, I), np.kron(B, I), np.kron(C, I), I


def _pbh(P, Q, R, tol=PBH_TOL):
    n = P.shape[0]
    for lam in np.linalg.eigvals(P) if n else []:
        if abs(lam) < 1.0 - 1e-9:
            continue
        M = lam * np.eye(n) - P
        sc = np.linalg.svd(np.hstack([M, Q]), compute_uv=False)
        so = np.linalg.svd(np.vstack([M, R]), compute_uv=False)
        if sc[n - 1] <= tol * sc[0]:
            raise PBHFailure(f"mode {lam} is not controllable (sigma = {sc[n - 1]:.3e})")
        if so[n - 1] <= tol * so[0]:
            raise PBHFailure(f"mode {lam} is not observable (sigma = {so[n - 1]:.3e})")


def _cascade_controller(pair, R, Y, thetas, a):
    p = pair.p
    H = pair.N_ss + pair.D_ss @ _as_ss(R, p)
    V = StateSpace.static(np.eye(p)) - H @ Y
    K_full = Y @ V.inverse() @ pair.D_ss
    # the poles of G+ cancel (K itself may have other poles outside the circle)
    chi = np.asarray(pair.chi)
    K, k_drop = split_modes(
        K_full, lambda e: chi.size > 0 and np.min(np.abs(chi - e) / np.maximum(1.0, np.abs(chi))) < 1e-5)
    K = reduce(K)
    lams = np.exp(1j * np.asarray(thetas, dtype=float))
    inv_k1 = StateSpace.scalar(ScalarRational(poly_from_roots(lams),
                                              poly_from_roots([a] * len(lams)), cancel_tol=0), p)
    K2, k2_drop = split_modes(inv_k1 @ K, lambda e: np.abs(lams - e).min() < 1e-5,
                              tol=BOUNDARY_CANCEL_TOL)
    K2 = reduce(K2)
    if opnorm(K2.D) > 1e-8:
        raise NumericalBreakdown("K2 is not strictly proper")
    P1, Q1, R1, S1 = _k1_realization(thetas, a, p)
    n1, n2 = P1.shape[0], K2.order
    Pm = np.block([[P1, Q1 @ K2.C], [np.zeros((n2, n1)), K2.A]])
    Qm = np.vstack([np.zeros((n1, p)), K2.B])
    Rm = np.hstack([R1, S1 @ K2.C])
    Pm, Qm, Rm = _real_if_close(Pm), _real_if_close(Qm), _real_if_close(Rm)
    if any(np.iscomplexobj(M) for M in (Pm, Qm, Rm)):
        Pm, Qm, Rm = (np.asarray(M, dtype=complex) for M in (Pm, Qm, Rm))
    Pm, Qm, Rm = _balance(Pm, Qm, Rm)
    _pbh(Pm, Qm, Rm)
    ctrl = DiscreteController(Pm, Qm, Rm, None, "mimo")
    probe = _circle(2.0, 16)
    mismatch = max(opnorm(ctrl.transfer(z) - K(z)) for z in probe)
    scale = max(opnorm(K(z)) for z in probe)
    if mismatch > BOUNDARY_CANCEL_TOL * max(1.0, scale):
        raise NumericalBreakdown(f"cascade realization differs from K by {mismatch:.3e}")
    try:
        ctrl.K = to_rational(K)
    except DegreeCapExceeded:
        # the state-space controller is authoritative; K is only reported
        ctrl.K = None
    return ctrl, {"cancelled_unstable_gain": k_drop, "cancelled_boundary_gain": k2_drop,
                  "cascade_mismatch": mismatch}


def build_controller(pair, R, Yplus, thetas=(0.0,), siso_shortcut=True, a=None,
                     full_output=False):
    """Controller from a solution ``Y+`` of the interpolation problem.

    Parameters
    ----------
    pair : CoprimePair
    R : rational approximant of the stable part (constant, scalar, matrix or system)
    Yplus : StateSpace or RationalMatrix
        Strictly proper, in the variable ``z``.
    thetas : sequence of float
        Exosystem frequencies.
    siso_shortcut : bool
        Companion realization of the closed form for ``p = 1``; otherwise
        the cascade ``K1 K2``.

    Raises
    ------
    InterpolationResidualTooLarge
        If ``Y+`` misses its conditions.
    InternalModelMissing
        If ``P`` lacks an eigenvalue at some ``exp(i theta)`` of
        geometric multiplicity ``p``.
    PBHFailure
        If the cascade has an uncontrollable or unobservable mode on or
        outside the circle.
    """
    a = pair.a if a is None else a
    Y = _as_ss(Yplus, pair.p)
    res = interpolation_residuals(pair, R, Y, thetas, with_derivative=not siso_shortcut)
    M1 = max(1.0, hinf_norm_exterior(Y, 1024) if Y.order else opnorm(Y.D))
    _check_residuals(res, M1, not siso_shortcut)
    info = {"residuals": res}
    if siso_shortcut:
        ctrl = _siso_controller(pair, R, Yplus if not isinstance(Yplus, StateSpace) else Y, thetas)
    else:
        ctrl, extra = _cascade_controller(pair, R, Y, thetas, a)
        info.update(extra)
    im = ctrl.internal_model(thetas)
    info["internal_model"] = im
    for entry in im:
        if entry["distance"] > INTERNAL_MODEL_TOL or entry["geometric_multiplicity"] < pair.p:
            raise InternalModelMissing(
                f"P lacks a {pair.p}-fold eigenvalue at exp(i {entry['theta']}): {entry}")
    if ctrl.K is not None and pair.p == 1:
        den = ctrl.K[0, 0].den
        info["denominator_at_frequencies"] = [abs(np.polynomial.polynomial.polyval(np.exp(1j * t), den))
                                              for t in thetas]
    return (ctrl, info) if full_output else ctrl


def bezout_factor_Z(pair, Y):
    """``Z+ = D+^{-1} (I - N+ Y+)`` with its (cancelling) unstable modes removed."""
    p = pair.p
    Z_full = pair.D_ss.inverse() @ (StateSpace.static(np.eye(p)) - pair.N_ss @ Y)
    return split_modes(Z_full, lambda e: abs(e) >= 1.0 - 1e-9)


def bezout_residual(pair, Y, Z, points=64):
    """``max |N+ Y+ + D+ Z+ - I|`` on the circles ``|z| = 1`` and ``|z| = 2``."""
    p = pair.p
    worst = 0.0
    for rad in (1.0, 2.0):
        for z in _circle(rad, points):
            worst = max(worst, opnorm(pair.N_ss(z) @ Y(z) + pair.D_ss(z) @ Z(z) - np.eye(p)))
    return worst


# -- stable part approximation ---------------------------------------------

def taylor_approximant(G_minus_samples, N, radius=1.0, points=None):
    """Truncated expansion ``R(z) = sum_{j<=N} G_j z^{-j}`` of a function analytic at infinity.

    Parameters
    ----------
    G_minus_samples : ndarray or callable
        Samples ``G(radius exp(2 pi i k / m))`` of shape ``(m,)`` or
        ``(m, p, q)``, or a callable evaluating ``G`` on an array of points.
    N : int
        Truncation order.
    radius : float
        Radius of the sampling circle; ``G`` must be analytic outside it.
    points : int, optional
        Number of samples when a callable is given.

    Returns
    -------
    RationalMatrix
        Entries ``(sum_j G_j z^{N-j}) / z^N``.
    """
    if callable(G_minus_samples):
        m = points or max(64, 4 * (N + 1))
        zs = radius * np.exp(2j * np.pi * np.arange(m) / m)
        vals = np.asarray(G_minus_samples(zs), dtype=complex)
    else:
        vals = np.asarray(G_minus_samples, dtype=complex)
    if vals.ndim == 1:
        vals = vals.reshape(-1, 1, 1)
    m = vals.shape[0]
    # G(r e^{i phi}) = sum_j G_j r^{-j} e^{-i j phi}, so G_j r^{-j} is an inverse-DFT coefficient
    coeffs = np.fft.ifft(vals, axis=0)
    Gj = coeffs[: N + 1] * (radius ** np.arange(N + 1))[:, None, None]
    p, q = vals.shape[1:]
    den = np.zeros(N + 1, dtype=complex)
    den[N] = 1.0
    entries = []
    for i in range(p):
        row = []
        for j in range(q):
            num = Gj[::-1, i, j]
            row.append(ScalarRational(num, den, cancel_tol=0))
        entries.append(row)
    return RationalMatrix(entries)


# -- closed-loop checks ----------------------------------------------------

def closed_loop_matrix(plant, ctrl):
    """``A_e = [[A, B R], [-Q C, P - Q D R]]``."""
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    P, Q, R = ctrl.P, ctrl.Q, ctrl.R
    return np.block([[A, B @ R], [-Q @ C, P - Q @ D @ R]])


def closed_loop_stability_check(plant, ctrl):
    """Spectral radius of the closed-loop state matrix."""
    Ae = closed_loop_matrix(plant, ctrl)
    if Ae.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(Ae)).max())


def steady_state(plant, ctrl, y_ref, v):
    """Equilibrium ``(x, xd)`` of the loop for constant ``y_ref`` and ``v``.

    Solves ``(I - A) x - B R xd = B v`` and
    ``Q C x + (I - P + Q D R) xd = Q (y_ref - D v)``.

    Raises
    ------
    Singular
        If the block matrix is singular.
    """
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    P, Q, R = ctrl.P, ctrl.Q, ctrl.R
    n, m = A.shape[0], P.shape[0]
    p = C.shape[0]
    y_ref = np.broadcast_to(np.asarray(y_ref, dtype=complex), (p,))
    v = np.broadcast_to(np.asarray(v, dtype=complex), (B.shape[1],))
    M = np.block([[np.eye(n) - A, -B @ R], [Q @ C, np.eye(m) - P + Q @ D @ R]])
    rhs = np.concatenate([B @ v, Q @ (y_ref - D @ v)])
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 1e-13 * max(1.0, s[0]):
        raise Singular("steady-state block matrix is singular")
    sol = np.linalg.solve(M, rhs)
    x, xd = sol[:n], sol[n:]
    if not (np.iscomplexobj(A) or ctrl.is_real is False):
        x, xd = x.real, xd.real
    return x, xd


# -- pipelines -------------------------------------------------------------

@contextmanager
def _step(k):
    try:
        yield
    except RegsynError as exc:
        if getattr(exc, "step", None) is None:
            exc.step = k
        raise


def _solve_Y(problem, M1, strategies=nv.STRATEGIES):
    T, info = nv.solve_realization(problem, strategies=strategies)
    Y = reduce(T).scale(M1)
    return T, Y, info


# a different interpolant is as valid as the first one, so these downstream
# failures move on to the next solver strategy instead of giving up
_RETRYABLE = (NumericalBreakdown, PBHFailure, InternalModelMissing, InterpolationResidualTooLarge)


def _design(pair, R, problem, thetas, siso, report, check=None):
    """Steps 5 to 9 over the solver strategies until one yields a controller."""
    attempts = []
    last = None
    for strategy in nv.STRATEGIES:
        try:
            with _step(5):
                _, Y, info = _solve_Y(problem, report.M1, (strategy,))
            report.interpolation = {"norm": info["norm"] * report.M1,
                                    "strategy": list(info["strategy"]), "eps": info["eps"],
                                    "disk_residuals": info["residuals"]}
            ctrl, Z = _finish(pair, R, Y, report.M1, thetas, siso, report)
            if check is not None:
                check(Y, ctrl)
        except _RETRYABLE as exc:
            attempts.append(f"{list(strategy)} step {getattr(exc, 'step', None)}: "
                            f"{type(exc).__name__}: {exc}")
            last = exc
            continue
        report.interpolation["failed_attempts"] = attempts
        return Y, ctrl, Z
    last.args = (f"{last} (all {len(attempts)} solver strategies failed)",) + last.args[1:]
    raise last


def _finish(pair, R, Y, M1, thetas, siso, report):
    with _step(6):
        Z, z_drop = bezout_factor_Z(pair, Y)
        report.residuals["bezout"] = bezout_residual(pair, Y, Z)
        report.residuals["Z_cancelled_gain"] = z_drop
        if report.residuals["bezout"] > BEZOUT_TOL:
            raise NumericalBreakdown(f"Bezout residual {report.residuals['bezout']:.3e}")
    with _step(8 if not siso else 5):
        ctrl, info = build_controller(pair, R, Y, thetas, siso_shortcut=siso, full_output=True)
    report.residuals.update({k: v for k, v in info["residuals"].items()})
    report.stability["internal_model"] = info["internal_model"]
    for key in ("cancelled_unstable_gain", "cancelled_boundary_gain", "cascade_mismatch",
                "denominator_at_frequencies"):
        if key in info:
            report.stability[key] = info[key]
    return ctrl, Z


def synthesize_delay(plant, tau=None, weight=None, a=DEFAULT_A, M=None, siso=True,
                     omega_max=1e3, grid_points=100000):
    """Design a digital controller for a scalar delay plant and constant signals.

    Parameters
    ----------
    plant : DelayPlant
    tau : float, optional
        Sampling period (defaults to the plant's).
    weight : Weight, optional
        Sampler weight (defaults to the plant's, else ``1/tau``).
    a : float
        Auxiliary stable pole.
    M : float, optional
        Override of the stabilization bound.
    siso : bool
        Use the scalar shortcut; otherwise the cascade path with the
        derivative boundary condition.

    Returns
    -------
    ctrl : DiscreteController
    report : SynthesisReport

    Raises
    ------
    AssumptionViolated
        If a standing assumption or the small-gain condition fails.
    """
    from . import plant as pl

    tau = plant.tau if tau is None else tau
    if tau is None:
        raise ValueError("sampling period tau is required")
    if weight is None:
        weight = plant.weight if plant.weight is not None and abs(plant.weight.tau - tau) < 1e-15 \
            else pl.Weight.constant(tau)
    report = SynthesisReport(path="siso" if siso else "mimo")
    thetas = (0.0,)
    with _step(0):
        rep, gammas, modal = pl.check_assumptions(plant, tau, weight, raise_on_failure=True)
    report.assumptions = rep
    with _step(1):
        Gp = pl.unstable_tf_dt(modal)
        pair = coprime_factorize(Gp, a)
        G0 = pl.transfer_G(plant, 0.0)
        report.thresholds["G0"] = complex(G0).real
        report.thresholds["gammas"] = [complex(g) for g in gammas]
        report.thresholds["chi"] = [complex(c) for c in pair.chi]
    with _step(2):
        report.delta_star = delta_star(pair, [[[G0]]], thetas)
        report.M, minfo = stabilization_bound_M(pair, override=M, full_output=True)
    with _step(3):
        report.M1 = max(2.0 * report.delta_star, report.M)
        Dn = hinf_norm_exterior(pair.D_ss, 4096) if pair.D_ss.order else opnorm(pair.D_ss.D)
        report.thresholds["D_plus_hinf"] = Dn
    with _step(4):
        R = pl.stable_approximant_R(modal)
        lhs, rhs, ok = pl.solvability_margin(plant, modal, pair.D_ss, report.M1, tau, weight,
                                             omega_max, grid_points)
        report.thresholds.update(margin_lhs=lhs, margin_rhs=rhs, margin_ok=ok, R=complex(R(0.0)).real)
        if not ok:
            raise AssumptionViolated(
                f"small-gain condition fails: sup |G - G+| = {lhs:.10g} >= {rhs:.10g}",
                {"margin": {"ok": False, "detail": f"lhs {lhs:.10g}, rhs {rhs:.10g}"}})
    with _step(5):
        problem = assemble_interpolation(pair, R, report.M1, thetas, siso_shortcut=siso)
    Y, ctrl, Z = _design(pair, R, problem, thetas, siso, report)
    report.thresholds["Y_plus"] = _coeffs(to_rational(Y)[0, 0])
    # small gain: |D+ (G-_tau - R) Y+| <= |D+| sqrt(tau) |w| sup|G - G+| |Y+|
    bound = np.sqrt(tau) * weight.l2_norm() * lhs
    report.stability["small_gain"] = Dn * bound * report.interpolation["norm"]
    report.stability["small_gain_ok"] = report.stability["small_gain"] < 1.0
    report.status = "success"
    report.interpolation["controller_K"] = _coeffs(ctrl.K[0, 0]) if ctrl.K is not None else None
    return ctrl, report


def _coeffs(f):
    def part(c):
        c = np.asarray(c)
        return [float(x) for x in c.real] if np.abs(c.imag).max(initial=0) <= 1e-12 else \
            [[float(x.real), float(x.imag)] for x in c]
    return {"num": part(f.num), "den": part(f.den)}


def _stable_gap(Gm, R):
    Rs = _as_ss(R, Gm.shape[0]) if not isinstance(R, StateSpace) else R
    E = Gm - Rs
    return hinf_norm_exterior(lambda z: E(z), 2048)


def synthesize_discrete(plant, thetas=(0.0,), a=DEFAULT_A, M=None, siso=None,
                        approximant="taylor", max_terms=400):
    """Design a regulating controller for a finite-dimensional discrete plant.

    Parameters
    ----------
    plant : DiscretePlant
    thetas : sequence of float
        Exosystem frequencies.
    a : float
    M : float, optional
        Override of the stabilization bound.
    siso : bool, optional
        Scalar shortcut (defaults to ``p == 1``).
    approximant : {'taylor', 'exact'}
        ``R`` as a truncated expansion of ``G-`` (smallest order meeting
        the small-gain bound with a factor 2 reserve) or ``G-`` itself.

    Returns
    -------
    ctrl : DiscreteController
    report : SynthesisReport
    """
    p = plant.p
    siso = (p == 1) if siso is None else siso
    report = SynthesisReport(path="siso" if siso else "mimo")
    with _step(0):
        rep = check_discrete_assumptions(plant, thetas)
        report.assumptions = rep
        bad = [k for k, v in rep.items() if not v["ok"]]
        if bad:
            raise AssumptionViolated(f"assumption(s) {', '.join(bad)} violated", rep)
    with _step(1):
        Gp, Gm = plant.split()
        pair = coprime_factorize(Gp, a)
        report.thresholds["chi"] = [complex(c) for c in pair.chi]
    with _step(2):
        Gb = [plant.transfer(np.exp(1j * t)) for t in thetas]
        report.delta_star = delta_star(pair, Gb, thetas)
        report.M, _ = stabilization_bound_M(pair, override=M, full_output=True)
    with _step(3):
        report.M1 = max(2.0 * report.delta_star, report.M)
        Dn = hinf_norm_exterior(pair.D_ss, 4096) if pair.D_ss.order else opnorm(pair.D_ss.D)
        report.thresholds["D_plus_hinf"] = Dn
        target = 1.0 / (report.M1 * Dn)
        report.thresholds["R_gap_bound"] = target
    with _step(4):
        if approximant == "exact":
            R, terms = Gm, None
        else:
            R = terms = None
            n_try = 0
            while n_try <= max_terms:
                Rm = taylor_approximant(lambda z: Gm(z), n_try, radius=1.0,
                                        points=max(256, 4 * (n_try + 1)))
                cand = from_rational(Rm)
                if _stable_gap(Gm, cand) < 0.5 * target:
                    R, terms = cand, n_try
                    break
                n_try = max(1, 2 * n_try)
            if R is None:
                raise NumericalBreakdown("no truncation order meets the small-gain bound")
        gap = _stable_gap(Gm, R)
        report.thresholds.update(R_terms=terms, R_gap=gap)
        if not gap < target:
            raise AssumptionViolated(f"|G- - R| = {gap:.6g} >= {target:.6g}")
    with _step(5):
        Rarg = _as_scalar(R) if siso else R
        problem = assemble_interpolation(pair, Rarg, report.M1, thetas, siso_shortcut=siso)
    Rs = R if isinstance(R, StateSpace) else _as_ss(R, p)

    def check(Y, ctrl):
        with _step(9):
            probe = _circle(1.0, 256)
            sg = max(opnorm(pair.D_ss(z) @ (Gm(z) - Rs(z)) @ Y(z)) for z in probe)
            report.stability["small_gain"] = sg
            report.stability["small_gain_ok"] = sg < 1.0
            rho = closed_loop_stability_check(plant, ctrl)
            report.stability["spectral_radius"] = rho
            if not rho < 1.0:
                raise NumericalBreakdown(f"closed loop is not power stable: rho = {rho:.6g}")

    Y, ctrl, Z = _design(pair, Rarg, problem, thetas, siso, report, check)
    report.status = "success"
    return ctrl, report
