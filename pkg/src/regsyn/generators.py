"""Seeded random instances for the verification suite and the tests.

All generators take a ``numpy.random.Generator`` so that every suite is
reproducible from a single integer seed.
"""

import numpy as np
import scipy.linalg

from .nevanlinna import BoundaryDatum, InteriorDatum, InterpolationProblem
from .plant import Weight
from .synthesis import DiscretePlant

__all__ = [
    "contraction", "random_np_problem", "random_interior_problem", "random_boundary_data",
    "boundary_only_problem",
    "random_finite_plant", "transmission_zeros", "random_discrete_plant", "THETA_SETS",
    "exosystem_signal",
]

# exosystem frequency sets used by the discrete suite
THETA_SETS = ((0.0,), (0.0, np.pi), (np.pi / 3, -np.pi / 3))


def contraction(rng, p, q, r):
    """Complex ``p x q`` matrix of spectral norm ``r``."""
    M = rng.normal(size=(p, q)) + 1j * rng.normal(size=(p, q))
    return r * M / np.linalg.norm(M, 2)


def _separated(rng, count, draw, gap):
    pts = []
    while len(pts) < count:
        z = draw()
        if all(abs(z - w) > gap for w in pts):
            pts.append(z)
    return pts


def _disk_point(rng):
    return 0.8 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())


def random_np_problem(rng, max_p=3, max_q=3, max_interior=4, max_boundary=3):
    """Solvable problem with a known witness.

    Interior data are read off a constant contraction ``W`` of norm 0.6
    (``w W`` under the zero-at-origin condition), so the Pick matrix is
    positive definite; boundary values and derivatives are arbitrary.
    """
    p = int(rng.integers(1, max_p + 1))
    q = int(rng.integers(1, max_q + 1))
    n = int(rng.integers(0, max_interior + 1))
    m = int(rng.integers(0, max_boundary + 1))
    zao = bool(rng.random() < 0.3)
    W = contraction(rng, p, q, 0.6)
    alphas = _separated(rng, n, lambda: _disk_point(rng), 0.1)
    alphas = [a if abs(a) > 0.05 else a + 0.1 for a in alphas]
    interior = []
    for a in alphas:
        xi = rng.normal(size=p) + 1j * rng.normal(size=p)
        val = W * (a if zao else 1.0)
        interior.append(InteriorDatum(a, xi, (xi.conj() @ val).conj()))
    return InterpolationProblem(p, q, interior, random_boundary_data(rng, p, q, m), zao)


def random_boundary_data(rng, p, q, m):
    """``m`` boundary data of shape ``p x q`` at separated points of the circle."""
    lams = _separated(rng, m, lambda: np.exp(2j * np.pi * rng.random()), 0.3)
    out = []
    for lam in lams:
        G = contraction(rng, p, q, 2.0 * rng.random()) if rng.random() < 0.8 else None
        out.append(BoundaryDatum(lam, contraction(rng, p, q, 0.7 * rng.random()), G))
    return out


def boundary_only_problem(rng, max_p=3, max_q=3, max_boundary=3):
    """Problem with boundary data only (always solvable)."""
    p = int(rng.integers(1, max_p + 1))
    q = int(rng.integers(1, max_q + 1))
    m = int(rng.integers(1, max_boundary + 1))
    return InterpolationProblem(p, q, (), random_boundary_data(rng, p, q, m), False)


def random_interior_problem(rng, max_p=3, max_q=3, max_interior=4):
    """Interior-only problem that may or may not be solvable.

    Directions are random with ``|eta| < |xi|`` pointwise, which leaves the
    Pick matrix indefinite in a sizeable fraction of draws.
    """
    p = int(rng.integers(1, max_p + 1))
    q = int(rng.integers(1, max_q + 1))
    n = int(rng.integers(1, max_interior + 1))
    alphas = _separated(rng, n, lambda: _disk_point(rng), 0.1)
    interior = []
    for a in alphas:
        xi = rng.normal(size=p) + 1j * rng.normal(size=p)
        eta = rng.normal(size=q) + 1j * rng.normal(size=q)
        eta *= rng.uniform(0.05, 0.99) * np.linalg.norm(xi) / np.linalg.norm(eta)
        interior.append(InteriorDatum(a, xi, eta))
    return InterpolationProblem(p, q, interior, (), False)


def random_finite_plant(rng, tau=1.0, max_n=4):
    """Delay-free SISO plant ``(A, b, c)`` with ``A`` invertible and nonresonant.

    Returns
    -------
    A, b, c : ndarray
    weight : Weight
        A positive two-piece weight with unit integral.
    """
    while True:
        n = int(rng.integers(1, max_n + 1))
        A = rng.normal(size=(n, n))
        ev = np.linalg.eigvals(A)
        # invertible A and no eigenvalue of exp(A tau) at one
        if np.abs(ev).min() < 0.1:
            continue
        k = np.round(ev.imag * tau / (2 * np.pi))
        if np.any((np.abs(ev.real) < 0.05) & (np.abs(ev.imag * tau - 2 * np.pi * k) < 0.05)):
            continue
        b = rng.normal(size=n)
        c = rng.normal(size=n)
        if abs(c @ np.linalg.solve(A, b)) < 0.05:
            continue
        s = rng.uniform(0.2, 0.8)
        share = rng.uniform(0.2, 0.8)
        w1, w2 = share / (s * tau), (1.0 - share) / ((1 - s) * tau)
        return A, b, c, Weight(tau, (0.0, s * tau, tau), (w1, w2))


def transmission_zeros(A, B, C, D):
    """Finite generalized eigenvalues of the Rosenbrock pencil of a square plant."""
    n, p = A.shape[0], B.shape[1]
    w = scipy.linalg.eigvals(np.block([[A, B], [C, D]]),
                             scipy.linalg.block_diag(np.eye(n), np.zeros((p, p))))
    return w[np.isfinite(w)]


def random_discrete_plant(rng, p, separation=0.2):
    """Square discrete plant with one or two unstable modes.

    Unstable modes have modulus in ``[1.1, 1.8]`` (real or a rotation
    pair), stable modes lie in ``(-0.6, 0.6)``, and the realization is a
    random similarity of the modal form. Draws are rejected while an
    unstable pole lies within ``separation`` of a transmission zero or of
    another unstable pole, which keeps the coprime factors well conditioned.
    """
    while True:
        nu = int(rng.integers(1, 3))
        ns = int(rng.integers(1, 4))
        if nu == 2 and rng.random() < 0.5:
            r, ph = rng.uniform(1.1, 1.8), rng.uniform(0.3, 2.5)
            blocks = [np.array([[r * np.cos(ph), -r * np.sin(ph)], [r * np.sin(ph), r * np.cos(ph)]])]
        else:
            blocks = [np.array([[s * rng.uniform(1.1, 1.8)]]) for s in rng.choice([-1, 1], nu)]
        blocks += [np.array([[rng.uniform(-0.6, 0.6)]]) for _ in range(ns)]
        J = scipy.linalg.block_diag(*blocks)
        n = J.shape[0]
        S = rng.normal(size=(n, n)) + 2 * np.eye(n)
        A = S @ J @ np.linalg.inv(S)
        B = rng.normal(size=(n, p))
        C = rng.normal(size=(p, n))
        D = 0.1 * rng.normal(size=(p, p))
        ev = np.linalg.eigvals(A)
        un = ev[np.abs(ev) > 1]
        z = transmission_zeros(A, B, C, D)
        if z.size and np.abs(np.subtract.outer(un, z)).min() < separation:
            continue
        if un.size > 1 and min(abs(un[i] - un[j]) for i in range(un.size) for j in range(i)) < separation:
            continue
        return DiscretePlant(A, B, C, D)


def exosystem_signal(rng, thetas, p):
    """Real signal ``k -> sum_l Re(c_l exp(i theta_l k))`` with random vector amplitudes.

    Conjugate frequency pairs give real sinusoids; ``theta = 0`` a constant
    and ``theta = pi`` an alternating sequence.
    """
    amps = [rng.normal(size=p) + 1j * rng.normal(size=p) for _ in thetas]

    def sig(k):
        return sum((c * np.exp(1j * th * k)).real for c, th in zip(amps, thetas))

    return sig
