"""Retarded delay plants with a finite unstable spectrum.

The plant is

    z'(t) = A0 z(t) + sum_j Aj z(t - h_j) + b u(t),
    y(t)  = sum_l c_l z(t - hh_l),

with characteristic matrix ``Delta(s) = s I - A0 - sum_j Aj exp(-h_j s)``.
This module locates the zeros of ``det Delta`` in a right half-plane,
builds the modal data of the unstable part, its continuous and sampled
transfer functions, the constant approximant of the sampled stable part,
and the small-gain solvability margin. Finite-dimensional plants can be
discretized exactly for testing the identity ``G_tau(1) = G(0)``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import (AssumptionViolated, ContourThroughZero, CountMismatch,
                     DegenerateNormalizer, MultiplicityDetected, ParseError,
                     PoleHit, Singular)
from .linalg import kernel_vector, opnorm
from .rational import ScalarRational, poly_from_roots

__all__ = [
    "Weight", "DelayPlant", "UnstableModalData", "char_matrix", "det_delta",
    "unstable_spectrum", "modal_data", "transfer_G", "transfer_G_plus",
    "unstable_tf_ct", "unstable_tf_dt", "stable_approximant_R",
    "solvability_margin", "stable_part_hinf", "discretize_finite", "discrete_dc_gain",
    "check_assumptions", "default_search_box",
    "load_plant", "plant_from_dict", "example_plant",
]

ROOT_TOL = 1e-10
SIMPLE_TOL = 1e-8
MODE_TOL = 1e-9


# -- weights ---------------------------------------------------------------

@dataclass(frozen=True)
class Weight:
    """Piecewise-constant sampler weight on ``[0, tau]``.

    Parameters
    ----------
    tau : float
        Sampling period.
    edges : tuple of float
        Breakpoints ``0 = t0 < t1 < ... < tk = tau``.
    values : tuple of float
        Value of ``w`` on each piece.
    """

    tau: float
    edges: tuple
    values: tuple

    @classmethod
    def constant(cls, tau, value=None):
        """``w = value`` on ``[0, tau]``; the default ``1/tau`` integrates to one."""
        value = 1.0 / tau if value is None else float(value)
        return cls(float(tau), (0.0, float(tau)), (value,))

    def __post_init__(self):
        if len(self.edges) != len(self.values) + 1:
            raise ValueError("need one more edge than values")
        if abs(self.edges[0]) > 0 or abs(self.edges[-1] - self.tau) > 1e-12 * self.tau:
            raise ValueError("edges must span [0, tau]")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def pieces(self):
        return [(self.edges[i], self.edges[i + 1], self.values[i]) for i in range(len(self.values))]

    def total(self):
        """``int_0^tau w``."""
        return float(sum(v * (b - a) for a, b, v in self.pieces()))

    def l2_norm(self):
        return float(np.sqrt(sum(v * v * (b - a) for a, b, v in self.pieces())))

    def exp_moment(self, lam):
        """``int_0^tau w(t) exp(lam t) dt`` in closed form."""
        lam = complex(lam)
        out = 0j
        for a, b, v in self.pieces():
            if abs(lam) * (b - a) < 1e-8:
                out += v * (b - a) * np.exp(lam * a) * (1 + lam * (b - a) / 2)
            else:
                out += v * (np.exp(lam * b) - np.exp(lam * a)) / lam
        return out


# -- plant -----------------------------------------------------------------

@dataclass(frozen=True)
class DelayPlant:
    """SISO retarded delay plant.

    Parameters
    ----------
    A : tuple of ndarray
        ``(A0, A1, ..., Aq)``, each ``n x n`` and real.
    delays : tuple of float
        State delays ``h_1 < ... < h_q``.
    b : ndarray
        Input vector, length ``n``.
    c : tuple of ndarray
        Output rows ``c_1, ..., c_qh``.
    output_delays : tuple of float
        ``hh_1 < ... < hh_qh``, all in ``[0, h_q]``.
    z0 : ndarray
        Initial state ``z(0)``.
    history : ndarray
        Polynomial history ``varpi(theta) = sum_k history[k] theta**k`` on
        ``[-h_q, 0]``; shape ``(K, n)``.
    tau : float, optional
        Sampling period carried from the plant file.
    weight : Weight, optional
        Sampler weight carried from the plant file.
    """

    A: tuple
    delays: tuple
    b: np.ndarray
    c: tuple
    output_delays: tuple
    z0: np.ndarray = None
    history: np.ndarray = None
    tau: float = None
    weight: Weight = None
    name: str = field(default="plant", compare=False)

    def __post_init__(self):
        A = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in self.A)
        n = A[0].shape[0]
        for a in A:
            if a.shape != (n, n):
                raise ValueError(f"matrix of shape {a.shape} in an n = {n} plant")
        if len(self.delays) != len(A) - 1:
            raise ValueError("need exactly one delay per delayed matrix")
        h = np.asarray(self.delays, dtype=float)
        if h.size and (h[0] <= 0 or np.any(np.diff(h) <= 0)):
            raise ValueError("state delays must be positive and strictly increasing")
        hh = np.asarray(self.output_delays, dtype=float)
        if len(hh) != len(self.c):
            raise ValueError("need one output delay per output row")
        if hh.size and (hh[0] < 0 or np.any(np.diff(hh) <= 0)):
            raise ValueError("output delays must be nonnegative and strictly increasing")
        hq = h[-1] if h.size else 0.0
        if hh.size and hh[-1] > hq + 1e-12:
            raise ValueError("output delays may not exceed the largest state delay")
        b = np.asarray(self.b, dtype=float).reshape(n)
        c = tuple(np.asarray(ci, dtype=float).reshape(n) for ci in self.c)
        z0 = np.zeros(n) if self.z0 is None else np.asarray(self.z0, dtype=float).reshape(n)
        hist = z0.reshape(1, n) if self.history is None else np.atleast_2d(
            np.asarray(self.history, dtype=float))
        if hist.shape[1] != n:
            raise ValueError("history coefficients must have n columns")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "delays", tuple(float(x) for x in h))
        object.__setattr__(self, "output_delays", tuple(float(x) for x in hh))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "history", hist)

    @property
    def n(self):
        return self.A[0].shape[0]

    @property
    def max_delay(self):
        return self.delays[-1] if self.delays else 0.0

    def history_at(self, theta):
        """``varpi(theta)`` for ``theta`` in ``[-h_q, 0]`` (array input gives ``(..., n)``)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape + (self.n,))
        for k in range(self.history.shape[0] - 1, -1, -1):
            out = out * theta[..., None] + self.history[k]
        return out

    def perturbed(self, A=None, b=1.0, c=1.0):
        """Copy with multiplicative factors on the coefficients.

        ``A`` is a sequence of factors (one per ``A_j``) or a single factor;
        ``b`` and ``c`` are scalar factors.
        """
        if A is None:
            A = [1.0] * len(self.A)
        elif np.isscalar(A):
            A = [A] * len(self.A)
        return replace(self, A=tuple(f * a for f, a in zip(A, self.A)), b=b * self.b,
                       c=tuple(c * ci for ci in self.c))


def example_plant():
    """The scalar test plant ``z' = 0.2 z + 0.2 z(t - 1) + u``, ``y = z(t - 0.1)``."""
    return DelayPlant(A=(np.array([[0.2]]), np.array([[0.2]])), delays=(1.0,),
                      b=np.array([1.0]), c=(np.array([1.0]),), output_delays=(0.1,),
                      z0=np.array([2.0]), history=np.array([[2.0]]), tau=2.0,
                      weight=Weight.constant(2.0), name="example")


# -- characteristic matrix -------------------------------------------------

def char_matrix(plant, s):
    """``Delta(s)``; array input gives a stack of shape ``(..., n, n)``."""
    s = np.asarray(s, dtype=complex)
    n = plant.n
    out = s[..., None, None] * np.eye(n) - plant.A[0]
    for h, Aj in zip(plant.delays, plant.A[1:]):
        out = out - np.exp(-h * s)[..., None, None] * Aj
    return out


def _char_derivative(plant, s):
    s = np.asarray(s, dtype=complex)
    out = np.broadcast_to(np.eye(plant.n, dtype=complex), s.shape + (plant.n, plant.n)).copy()
    for h, Aj in zip(plant.delays, plant.A[1:]):
        out = out + (h * np.exp(-h * s))[..., None, None] * Aj
    return out


def det_delta(plant, s):
    """``det Delta(s)`` (vectorized)."""
    return np.linalg.det(char_matrix(plant, s))


def _adjugate(M):
    """Adjugate through the SVD, well defined at singular ``M``."""
    U, sv, Vh = np.linalg.svd(M)
    n = sv.size
    prods = np.array([np.prod(np.delete(sv, i)) for i in range(n)])
    phase = np.linalg.det(U) * np.linalg.det(Vh)
    return phase * (Vh.conj().T * prods) @ U.conj().T


def _det_and_derivative(plant, s):
    D = char_matrix(plant, s)
    # Jacobi's formula: (det)' = trace(adj(Delta) Delta')
    return np.linalg.det(D), np.trace(_adjugate(D) @ _char_derivative(plant, s))


def _scale(plant):
    return 1.0 + sum(opnorm(a) for a in plant.A)


# -- argument principle ----------------------------------------------------

def _edge_phase(plant, a, b, n0=64, max_points=200000):
    """Total change of arg det Delta along the segment a -> b.

    Adds midpoints wherever consecutive samples differ in phase by more
    than pi/4, so the unwrapped increment is unambiguous.
    """
    t = np.linspace(0.0, 1.0, n0 + 1)
    vals = det_delta(plant, a + (b - a) * t)
    scale = _scale(plant) ** plant.n
    while True:
        if np.min(np.abs(vals)) < 1e-12 * scale:
            raise ContourThroughZero(f"det Delta nearly vanishes on the contour {a} -> {b}")
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) > np.pi / 4
        if not np.any(bad):
            return float(np.sum(dphi))
        if t.size > max_points:
            raise ContourThroughZero("phase refinement did not settle; a zero is too close")
        mids = 0.5 * (t[:-1][bad] + t[1:][bad])
        t_new = np.sort(np.concatenate([t, mids]))
        vals_new = np.empty(t_new.size, dtype=complex)
        pos = np.searchsorted(t_new, t)
        vals_new[pos] = vals
        mask = np.ones(t_new.size, bool)
        mask[pos] = False
        vals_new[mask] = det_delta(plant, a + (b - a) * t_new[mask])
        t, vals = t_new, vals_new


def _winding(plant, x0, x1, y0, y1):
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = sum(_edge_phase(plant, corners[k], corners[(k + 1) % 4]) for k in range(4))
    return int(round(total / (2 * np.pi)))


def _newton(plant, s, iters=60):
    for _ in range(iters):
        f, df = _det_and_derivative(plant, s)
        if f == 0:
            break
        if not np.isfinite(df) or df == 0:
            return None
        step = f / df
        s = s - step
        if abs(step) < 1e-15 * max(1.0, abs(s)):
            break
    return complex(s)


def _probe_multiplicity(plant, box, count):
    """Raise MultiplicityDetected if Newton from the box centre lands on a multiple zero."""
    x0, x1, y0, y1 = box
    s = _newton(plant, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), iters=200)
    if s is None or not (x0 <= s.real <= x1 and y0 <= s.imag <= y1):
        return
    _, dd = _det_and_derivative(plant, s)
    if abs(dd) < SIMPLE_TOL * _scale(plant) ** plant.n:
        raise MultiplicityDetected(
            f"{count} zeros of det Delta cluster near {s:.6g}; "
            "the unstable zeros must be simple (b9)",
            {"b9": {"ok": False, "detail": "zeros not simple"}})


def _locate(plant, box, count, depth=0, found=None):
    x0, x1, y0, y1 = box
    if count == 0:
        return
    if count == 1:
        s = _newton(plant, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        if s is not None and x0 <= s.real <= x1 and y0 <= s.imag <= y1:
            found.append(s)
            return
    if max(x1 - x0, y1 - y0) < 1e-7 or depth > 60:
        if count > 1:
            raise MultiplicityDetected(
                f"{count} zeros of det Delta cluster near {complex(x0, y0)}; "
                "the unstable zeros must be simple (b9)",
                {"b9": {"ok": False, "detail": "zeros not simple"}})
        raise CountMismatch("Newton iteration failed to converge on an isolated zero")
    # split the longer side slightly off centre so a zero on a symmetry line
    # does not land on the new contour edge
    for shift in (0.5 + 1 / np.pi / 17, 0.5 - 1 / np.e / 13, 0.5 + 0.0731):
        try:
            if x1 - x0 >= y1 - y0:
                xm = x0 + shift * (x1 - x0)
                halves = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
            else:
                ym = y0 + shift * (y1 - y0)
                halves = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
            counts = [_winding(plant, *h) for h in halves]
            break
        except ContourThroughZero:
            continue
    else:
        if count > 1:
            _probe_multiplicity(plant, box, count)
        raise ContourThroughZero("could not split the search box away from a zero")
    if sum(counts) != count:
        raise CountMismatch(f"sub-box counts {counts} do not add up to {count}")
    for h, k in zip(halves, counts):
        _locate(plant, h, k, depth + 1, found)


def default_search_box(plant, margin=0.0):
    """``Re s`` in ``[-margin, 1 + sum |Aj| exp(h_j margin)]`` and ``|Im s|`` up to that bound, capped at 100."""
    hs = (0.0,) + plant.delays
    bound = 1.0 + sum(opnorm(a) * np.exp(h * margin) for h, a in zip(hs, plant.A))
    return (-margin, bound, -min(bound, 100.0), min(bound, 100.0))


def unstable_spectrum(plant, margin=0.0, box=None):
    """Zeros of ``det Delta`` with ``Re s > -margin``.

    The zeros inside the search box are counted with the argument
    principle, the box is bisected until every piece holds one zero, and
    each zero is polished by Newton's method on ``det Delta``.

    Parameters
    ----------
    plant : DelayPlant
    margin : float
        Left edge of the search box is ``Re s = -margin``.
    box : tuple, optional
        ``(x0, x1, y0, y1)``; defaults to :func:`default_search_box`.

    Returns
    -------
    ndarray
        Zeros sorted by decreasing real part, then by imaginary part.

    Raises
    ------
    ContourThroughZero, MultiplicityDetected, CountMismatch
    """
    box = default_search_box(plant, margin) if box is None else tuple(box)
    count = _winding(plant, *box)
    if count < 0:
        raise CountMismatch(f"negative winding number {count}")
    found = []
    _locate(plant, box, count, 0, found)
    if len(found) != count:
        raise CountMismatch(f"located {len(found)} zeros, winding number says {count}")
    roots = np.array(found, dtype=complex)
    # snap conjugate pairs of a real plant and real zeros
    for k, r in enumerate(roots):
        if abs(r.imag) < 1e-10 * max(1.0, abs(r)):
            roots[k] = r.real
    scale = _scale(plant) ** plant.n
    for r in roots:
        det, dd = _det_and_derivative(plant, r)
        if abs(det) > ROOT_TOL * scale:
            raise CountMismatch(f"polished zero {r} leaves |det Delta| = {abs(det):.3e}")
        if abs(dd) < SIMPLE_TOL * scale:
            raise MultiplicityDetected(f"zero {r} of det Delta is not simple",
                                       {"b9": {"ok": False, "detail": f"multiple zero at {r}"}})
    order = np.lexsort((roots.imag, -roots.real))
    return roots[order]


# -- modal data ------------------------------------------------------------

@dataclass(frozen=True)
class UnstableModalData:
    """Spectral data of the unstable part of a delay plant."""

    gammas: np.ndarray
    varsigma: np.ndarray
    nu: np.ndarray
    d: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    tau: float

    @property
    def size(self):
        return len(self.gammas)

    def conjugate_closed(self, tol=1e-9):
        g = np.asarray(self.gammas)
        return all(np.min(np.abs(g - x.conjugate())) < tol * max(1.0, abs(x)) for x in g)


def _inner(x, y):
    """``(x, y) = y* x``."""
    return complex(np.vdot(y, x))


def modal_data(plant, gammas, tau, weight):
    """Eigenvectors, normalizers, residues and sampled coefficients.

    Parameters
    ----------
    plant : DelayPlant
    gammas : array_like
        Simple zeros of ``det Delta`` (from :func:`unstable_spectrum`).
    tau : float
    weight : Weight

    Raises
    ------
    AssumptionViolated
        If one of the sampling conditions (b6), (b7), (b8) fails.
    DegenerateNormalizer
        If some ``d_m`` vanishes.
    """
    gammas = np.asarray(gammas, dtype=complex).ravel()
    vs, nus, ds, ks, als, bes = [], [], [], [], [], []
    report = {}
    for k, g in enumerate(gammas):
        if abs(np.exp(g * tau) - 1.0) < MODE_TOL:
            report["b6"] = {"ok": False, "detail": f"exp(gamma tau) = 1 for gamma = {g}"}
            raise AssumptionViolated(f"(b6) fails: {g} is a multiple of 2 pi i / tau", report)
        for g2 in gammas[:k]:
            if abs(np.exp(g * tau) - np.exp(g2 * tau)) < MODE_TOL * abs(np.exp(g * tau)):
                report["b8"] = {"ok": False, "detail": f"{g} and {g2} alias under sampling"}
                raise AssumptionViolated(
                    f"(b8) fails: tau ({g} - {g2}) is a nonzero multiple of 2 pi i", report)
        vsig = kernel_vector(char_matrix(plant, g), tol=1e-7)
        nu = kernel_vector(char_matrix(plant, np.conj(g)).conj().T, tol=1e-7)
        d = _inner(vsig, nu) + sum(h * np.exp(-g * h) * _inner(Aj @ vsig, nu)
                                   for h, Aj in zip(plant.delays, plant.A[1:]))
        if abs(d) < MODE_TOL:
            raise DegenerateNormalizer(f"normalizer d = {d} vanishes for gamma = {g}")
        out = sum(np.exp(-g * hh) * (cl @ vsig) for hh, cl in zip(plant.output_delays, plant.c))
        kappa = _inner(plant.b.astype(complex), nu) / d * out
        beta = weight.exp_moment(g)
        if abs(beta) < MODE_TOL:
            report["b7"] = {"ok": False, "detail": f"weighted moment vanishes at {g}"}
            raise AssumptionViolated(f"(b7) fails: int w exp(gamma t) = 0 at gamma = {g}", report)
        alpha = kappa * (np.exp(g * tau) - 1.0) / g * beta
        vs.append(vsig)
        nus.append(nu)
        ds.append(d)
        ks.append(kappa)
        als.append(alpha)
        bes.append(beta)
    n = plant.n
    return UnstableModalData(
        gammas=gammas,
        varsigma=np.array(vs, dtype=complex).reshape(-1, n),
        nu=np.array(nus, dtype=complex).reshape(-1, n),
        d=np.array(ds, dtype=complex), kappa=np.array(ks, dtype=complex),
        alpha=np.array(als, dtype=complex), beta=np.array(bes, dtype=complex), tau=float(tau))


# -- transfer functions ----------------------------------------------------

def transfer_G(plant, s):
    """``G(s) = sum_l exp(-hh_l s) c_l Delta(s)^{-1} b`` (vectorized)."""
    s = np.asarray(s, dtype=complex)
    D = char_matrix(plant, s)
    cond = np.linalg.cond(D)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e14):
        raise PoleHit("evaluation at (or extremely near) a zero of det Delta")
    x = np.linalg.solve(D, np.broadcast_to(plant.b.astype(complex), s.shape + (plant.n,))[..., None])[..., 0]
    out = np.zeros(s.shape, dtype=complex)
    for hh, cl in zip(plant.output_delays, plant.c):
        out = out + np.exp(-hh * s) * (x @ cl)
    return complex(out) if out.ndim == 0 else out


def transfer_G_plus(modal, s):
    """``G+(s) = sum kappa_m / (s - gamma_m)`` (vectorized)."""
    s = np.asarray(s, dtype=complex)
    out = np.zeros(s.shape, dtype=complex)
    for k, g in zip(modal.kappa, modal.gammas):
        out = out + k / (s - g)
    return out


def _partial_fractions(residues, poles, real):
    if len(poles) == 0:
        return ScalarRational([0.0])
    den = poly_from_roots(poles)
    num = np.zeros(len(poles), dtype=complex)
    for k, (r, p) in enumerate(zip(residues, poles)):
        others = poly_from_roots(np.delete(poles, k))
        num[: len(others)] += r * others
    f = ScalarRational(num, den)
    return f.real_coefficients() if real else f


def unstable_tf_ct(modal):
    """``G+(s)`` as a canonical rational (real coefficients for conjugate-closed data)."""
    return _partial_fractions(modal.kappa, modal.gammas, modal.conjugate_closed())


def unstable_tf_dt(modal):
    """``G+_tau(z) = sum alpha_m / (z - exp(gamma_m tau))``."""
    return _partial_fractions(modal.alpha, np.exp(modal.gammas * modal.tau),
                              modal.conjugate_closed())


def stable_approximant_R(modal):
    """The constant ``R = sum kappa_m (beta_m - 1) / gamma_m``."""
    if modal.size == 0:
        return ScalarRational([0.0])
    r = complex(np.sum(modal.kappa * (modal.beta - 1.0) / modal.gammas))
    if modal.conjugate_closed():
        r = r.real
    return ScalarRational([r])


# -- solvability margin ----------------------------------------------------

def _golden_max(f, a, b, iters=60):
    g = (np.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 > f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 > f2 else (x2, f2)


def stable_part_hinf(plant, modal, omega_max=1e3, grid_points=100000, full_output=False):
    """``sup |G(i w) - G+(i w)|`` over ``|w| <= omega_max``.

    Linear grid plus a logarithmic grid near zero, then golden-section
    refinement around the best sample.
    """
    lin = np.linspace(-omega_max, omega_max, grid_points)
    lg = np.logspace(-4, np.log10(omega_max), 2000)
    w = np.unique(np.concatenate([lin, lg, -lg, [0.0]]))

    def f(om):
        s = 1j * np.asarray(om, dtype=float)
        return np.abs(transfer_G(plant, s) - transfer_G_plus(modal, s))

    vals = f(w)
    k = int(np.argmax(vals))
    lo, hi = w[max(k - 1, 0)], w[min(k + 1, w.size - 1)]
    x, fx = _golden_max(lambda t: float(f(t)), lo, hi)
    best, arg = (float(fx), float(x)) if fx > vals[k] else (float(vals[k]), float(w[k]))
    if full_output:
        return best, arg
    return best


def solvability_margin(plant, modal, D_plus, M1, tau, weight, omega_max=1e3,
                       grid_points=100000):
    """Both sides of the small-gain condition on the stable part.

    Returns
    -------
    lhs : float
        ``sup |G - G+|`` on the imaginary axis.
    rhs : float
        ``1 / (sqrt(tau) M1 |w|_L2 |D+|_inf)``.
    ok : bool
        ``lhs < rhs``.
    """
    from .rational import hinf_norm_exterior

    lhs = stable_part_hinf(plant, modal, omega_max, grid_points)
    dn = hinf_norm_exterior(D_plus)
    rhs = 1.0 / (np.sqrt(tau) * M1 * weight.l2_norm() * dn)
    return lhs, float(rhs), bool(lhs < rhs)


# -- finite-dimensional discretization -------------------------------------

def discretize_finite(Afd, bfd, cfd, tau, weight, panels=64, order=8):
    """Sampled-data discretization of ``x' = A x + b u``, ``y = c x``.

    Returns
    -------
    Atau, Btau, Ctau, Dtau : ndarray
        ``exp(A tau)``, ``int_0^tau exp(A t) b dt``,
        ``int_0^tau w(t) c exp(A t) dt`` and ``int_0^tau w(t) (G 1)(t) dt``,
        the integrals by composite Gauss-Legendre quadrature on each piece
        of the weight.

    Raises
    ------
    Singular
        If ``1`` is an eigenvalue of ``Atau``.
    """
    A = np.atleast_2d(np.asarray(Afd, dtype=float))
    n = A.shape[0]
    b = np.asarray(bfd, dtype=float).reshape(n, -1)
    c = np.asarray(cfd, dtype=float).reshape(-1, n)
    m = b.shape[1]
    # exp([[A, b], [0, 0]] t) carries exp(A t) and int_0^t exp(A s) b ds
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = b
    xg, wg = np.polynomial.legendre.leggauss(order)

    def nodes(a, b_, k):
        e = np.linspace(a, b_, k + 1)
        mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * (e[1:] - e[:-1])
        return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()

    def expaug(t):
        return scipy.linalg.expm(aug * t)

    Atau = scipy.linalg.expm(A * tau)
    tB, wB = nodes(0.0, tau, panels)
    Btau = sum(wi * scipy.linalg.expm(A * ti) @ b for ti, wi in zip(tB, wB))
    Ctau = np.zeros((c.shape[0], n))
    Dtau = np.zeros((c.shape[0], m))
    for a, bb, v in weight.pieces():
        ts, ws = nodes(a, bb, panels)
        for ti, wi in zip(ts, ws):
            E = expaug(ti)
            Ctau += wi * v * c @ E[:n, :n]
            Dtau += wi * v * c @ E[:n, n:]
    if np.min(np.abs(np.linalg.eigvals(Atau) - 1.0)) < 1e-12:
        raise Singular("1 is an eigenvalue of exp(A tau)")
    return Atau, Btau, Ctau, Dtau


def discrete_dc_gain(Atau, Btau, Ctau, Dtau):
    """``G_tau(1) = C (I - A)^{-1} B + D``."""
    n = Atau.shape[0]
    return Ctau @ np.linalg.solve(np.eye(n) - Atau, Btau) + Dtau


# -- assumption report -----------------------------------------------------

def check_assumptions(plant, tau, weight, margin=0.0, raise_on_failure=False):
    """Evaluate the standing assumptions (b1)-(b9) for a delay plant.

    Returns
    -------
    report : dict
        One entry per label with ``ok`` and ``detail``.
    gammas : ndarray or None
        Unstable zeros when the spectral search succeeded.
    modal : UnstableModalData or None
    """
    rep = {}
    scale = _scale(plant) ** plant.n
    d0 = det_delta(plant, 0.0)
    rep["b1"] = {"ok": bool(abs(d0) > 1e-9 * scale), "detail": f"|det Delta(0)| = {abs(d0):.10g}"}
    if rep["b1"]["ok"]:
        g0 = transfer_G(plant, 0.0)
        rep["b2"] = {"ok": bool(abs(g0) > 1e-12), "detail": f"G(0) = {g0.real:.10g}"}
    else:
        rep["b2"] = {"ok": False, "detail": "G(0) undefined (b1 fails)"}
    rep["b3"] = {"ok": True, "detail": "retarded delay system: finitely many zeros in any right half-plane"}
    rep["b4"] = {"ok": True, "detail": "stable part of a retarded delay system is exponentially stable"}
    gammas = modal = None
    try:
        gammas = unstable_spectrum(plant, margin)
        rep["b9"] = {"ok": True, "detail": f"{len(gammas)} simple zero(s)"}
    except MultiplicityDetected as exc:
        rep["b9"] = {"ok": False, "detail": str(exc)}
    except (ContourThroughZero, CountMismatch) as exc:
        rep["b9"] = {"ok": False, "detail": f"spectral search failed: {exc}"}
    if gammas is not None:
        try:
            modal = modal_data(plant, gammas, tau, weight)
            for key in ("b6", "b7", "b8"):
                rep[key] = {"ok": True, "detail": "holds for every unstable zero"}
            kap = np.abs(modal.kappa) if modal.size else np.zeros(0)
            ok5 = bool(np.all(kap > MODE_TOL))
            rep["b5"] = {"ok": ok5, "detail": "every unstable mode is controllable and observable"
                         if ok5 else "some residue kappa_m vanishes"}
        except AssumptionViolated as exc:
            rep.update(exc.report)
            for key in ("b5", "b6", "b7", "b8"):
                rep.setdefault(key, {"ok": False, "detail": f"not evaluated: {exc}"})
        except DegenerateNormalizer as exc:
            for key in ("b5", "b6", "b7", "b8"):
                rep.setdefault(key, {"ok": False, "detail": str(exc)})
    else:
        for key in ("b5", "b6", "b7", "b8"):
            rep[key] = {"ok": False, "detail": "not evaluated (no spectrum)"}
    rep = {k: rep[k] for k in sorted(rep)}
    if raise_on_failure:
        bad = [k for k, v in rep.items() if not v["ok"]]
        if bad:
            raise AssumptionViolated(f"assumption(s) {', '.join(bad)} violated", rep)
    return rep, gammas, modal


# -- plant files -----------------------------------------------------------

def _matrix(value, n, key):
    arr = np.asarray(value, dtype=float)
    if arr.size != n * n:
        raise ParseError(f"{key}: expected {n * n} entries, got {arr.size}")
    return arr.reshape(n, n)


def plant_from_dict(data, name="plant"):
    """Build a :class:`DelayPlant` from parsed key-value data.

    Recognised keys: ``n``, ``A0``..``Aq`` (row-major), ``delays``, ``b``,
    ``c`` (list of rows), ``output_delays``, ``tau``, ``weight`` (constant
    value), ``z0`` and ``history`` (constant vector or list of polynomial
    coefficient vectors, lowest degree first).
    """
    try:
        n = int(data["n"])
        delays = [float(x) for x in data.get("delays", [])]
        A = [_matrix(data["A0"], n, "A0")]
        for j in range(1, len(delays) + 1):
            A.append(_matrix(data[f"A{j}"], n, f"A{j}"))
        b = np.asarray(data["b"], dtype=float).reshape(n)
        c_raw = data["c"]
        c_arr = np.asarray(c_raw, dtype=float)
        c = [c_arr.reshape(n)] if c_arr.ndim == 1 else [row.reshape(n) for row in c_arr]
        out_delays = data.get("output_delays", [0.0] * len(c))
        if np.isscalar(out_delays):
            out_delays = [out_delays]
        tau = float(data["tau"]) if "tau" in data else None
        weight = None
        if tau is not None:
            weight = Weight.constant(tau, data.get("weight"))
        z0 = np.asarray(data.get("z0", np.zeros(n)), dtype=float).reshape(n)
        hist = data.get("history", z0)
        hist = np.asarray(hist, dtype=float)
        hist = hist.reshape(1, n) if hist.ndim <= 1 else hist.reshape(-1, n)
    except KeyError as exc:
        raise ParseError(f"missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    try:
        return DelayPlant(A=tuple(A), delays=tuple(delays), b=b, c=tuple(c),
                          output_delays=tuple(float(x) for x in out_delays), z0=z0,
                          history=hist, tau=tau, weight=weight, name=name)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_plant(path):
    """Parse a TOML plant file.

    Raises
    ------
    ParseError
        On unreadable files, malformed TOML or inconsistent dimensions.
    """
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    import os
    return plant_from_dict(data, name=os.path.splitext(os.path.basename(str(path)))[0])
