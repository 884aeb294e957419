"""Invariant suite behind ``regsyn verify``.

Each check measures one number and compares it with a bound. Bounds
marked ``scalable`` are numerical tolerances; the ``strict`` profile
divides them by 100 so that only checks with less than two digits of
headroom start to fail. Structural bounds (ratios, counts, spectral
radii) are the same under every profile.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import linalg, nevanlinna as nv, plant as pl, rational, simulate as sim, synthesis as syn
from .errors import RegsynError
from .generators import (THETA_SETS, random_discrete_plant, random_finite_plant,
                         random_interior_problem, random_np_problem)

__all__ = ["Check", "CheckResult", "CHECKS", "PROFILES", "run_checks", "PRINTED_K", "dde_exact"]

PROFILES = {"default": 1.0, "strict": 0.01}

# printed controller of the worked example, ascending powers of z
PRINTED_K = {"num": (-0.7602, 0.7712), "den": (-0.5186, -0.4814, 1.0)}


@dataclass(frozen=True)
class Check:
    name: str
    func: object
    bound: float
    sense: str = "<="
    scalable: bool = True


@dataclass
class CheckResult:
    name: str
    value: float
    bound: float
    sense: str
    passed: bool
    seconds: float
    error: str = ""

    def as_dict(self):
        return {"name": self.name, "value": self.value, "bound": self.bound, "sense": self.sense,
                "passed": self.passed, "seconds": self.seconds, "error": self.error}


class _Cache:
    """Lazily shared artifacts (the example design and its closed loop)."""

    def __init__(self):
        self._store = {}

    def get(self, key, make):
        if key not in self._store:
            self._store[key] = make()
        return self._store[key]


_cache = _Cache()


def _example_design():
    return _cache.get("design", lambda: syn.synthesize_delay(pl.example_plant()))


def _example_trace(v=0.0, factor=None):
    def make():
        plant = pl.example_plant()
        ctrl, _ = _example_design()
        cfg = sim.SimConfig(tau=2.0, v=v)
        if factor is None:
            return sim.run_closed_loop(plant, ctrl, cfg)
        return sim.perturb_and_rerun(plant, ctrl, cfg, {"A": [factor, 1.0]})
    return _cache.get(("trace", v, factor), make)


# -- linalg ----------------------------------------------------------------

def _sqrt_inverse_diag():
    S = linalg.hermitian_sqrt_inverse(np.diag([4.0, 9.0]))
    return float(np.abs(S - np.diag([0.5, 1.0 / 3.0])).max())


def _sqrt_inverse_random():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        M = X @ X.conj().T + np.eye(4)
        S = linalg.hermitian_sqrt_inverse(M)
        worst = max(worst, float(np.abs(S @ M @ S - np.eye(4)).max()))
    return worst


def _solve_residual():
    rng = np.random.default_rng(12)
    M = rng.normal(size=(5, 5)) + 5 * np.eye(5)
    B = rng.normal(size=(5, 2))
    X = linalg.solve(M, B)
    return float(np.linalg.norm(M @ X - B) / np.linalg.norm(B))


# -- rational --------------------------------------------------------------

def _hinf_exterior():
    # sup over |z| >= 1 of |1 / (z - 0.5)| is 2, attained at z = 1
    F = rational.RationalMatrix.scalar(rational.ScalarRational([1.0], [-0.5, 1.0]))
    return abs(rational.hinf_norm_exterior(F) - 2.0)


# -- nevanlinna ------------------------------------------------------------

def _np_residuals(key):
    def run():
        rng = np.random.default_rng(21)
        worst = 0.0
        for _ in range(12):
            problem = random_np_problem(rng)
            _, info = nv.solve_realization(problem)
            worst = max(worst, info["residuals"][key])
        return worst
    return lambda: _cache.get(("np", key), run)


def _pick_agreement():
    rng = np.random.default_rng(22)
    bad = 0
    for _ in range(40):
        problem = random_interior_problem(rng)
        pick = linalg.is_positive_definite(nv.pick_matrix(problem.interior))
        bad += int(nv.solvable(problem) != pick)
    return bad


# -- plant -----------------------------------------------------------------

def _gamma_error():
    g = pl.unstable_spectrum(pl.example_plant())
    return abs(g[0].real - 0.3421) if g.size == 1 else np.inf


def _dc_gain_error():
    return abs(complex(pl.transfer_G(pl.example_plant(), 0.0)) + 2.5)


def _discretization_identity():
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(5):
        A, b, c, w = random_finite_plant(rng)
        mats = pl.discretize_finite(A, b, c, 1.0, w)
        gain = pl.discrete_dc_gain(*mats)[0, 0]
        worst = max(worst, abs(gain + c @ np.linalg.solve(A, b)))
    return worst


def _margin_ratio():
    rep = _example_design()[1]
    return rep.thresholds["margin_lhs"] / rep.thresholds["margin_rhs"]


# -- synthesis -------------------------------------------------------------

def _controller_coefficients():
    K = _example_design()[0].K[0, 0]
    num = np.asarray(K.num).real / K.den[-1].real
    den = np.asarray(K.den).real / K.den[-1].real
    got = np.concatenate([num, den[:-1]])
    ref = np.concatenate([PRINTED_K["num"], PRINTED_K["den"][:-1]])
    return float(np.max(np.abs(got - ref) / np.abs(ref)))


def _internal_model():
    K = _example_design()[0].K[0, 0]
    return float(abs(np.polynomial.polynomial.polyval(1.0, K.den)) / abs(K.den[-1]))


def _bezout():
    return _example_design()[1].residuals["bezout"]


def _mimo_internal_model():
    ctrl, _ = _cache.get("mimo", lambda: syn.synthesize_delay(pl.example_plant(), siso=False))
    return ctrl.internal_model()[0]["distance"]


def _discrete_radius():
    rng = np.random.default_rng(41)
    worst = 0.0
    for k in range(3):
        plant = random_discrete_plant(rng, 1 + k % 2)
        _, rep = syn.synthesize_discrete(plant, THETA_SETS[k], a=0.0)
        worst = max(worst, rep.stability["spectral_radius"])
    return worst


# -- simulate --------------------------------------------------------------

def _exp_error():
    p = pl.DelayPlant(A=(np.array([[-1.0]]),), delays=(), b=np.zeros(1), c=(np.ones(1),),
                      output_delays=(0.0,), z0=np.ones(1))
    h = sim.integrate_step(p, None, 0.0, 0.01, 100)
    return abs(h.state[0] - np.exp(-1.0))


def dde_exact(T):
    """``z(T)`` for ``z' = z(t - 1)``, ``z = 1`` on ``[-1, 0]``, at integer ``T``.

    On each unit interval the solution is a polynomial, obtained by
    integrating the previous piece.
    """
    piece, value = np.polynomial.Polynomial([1.0]), 1.0
    for _ in range(int(T)):
        prim = piece.integ()
        piece = value + prim - prim(0.0)
        value = float(piece(1.0))
    return value


def _integrator_order():
    # the solution is a polynomial of degree k on [k - 1, k]; at T = 6 the
    # degree exceeds what RK4 integrates exactly
    p = pl.DelayPlant(A=(np.zeros((1, 1)), np.ones((1, 1))), delays=(1.0,), b=np.zeros(1),
                      c=(np.ones(1),), output_delays=(0.0,), z0=np.ones(1), history=np.ones((1, 1)))
    ref = dde_exact(6)
    errs = []
    for dt in (0.25, 0.125):
        h = sim.integrate_step(p, None, 0.0, dt, int(round(6 / dt)))
        errs.append(abs(h.state[0] - ref))
    return errs[0] / max(errs[1], 1e-300)


def _sampler_linearity():
    rng = np.random.default_rng(51)
    w = pl.Weight(2.0, (0.0, 0.5, 2.0), (0.4, 0.4))
    y1, y2 = rng.normal(size=65), rng.normal(size=65)
    dt = 2.0 / 64
    lhs = sim.sampler(3.0 * y1 + y2, dt, w)
    return abs(lhs - 3.0 * sim.sampler(y1, dt, w) - sim.sampler(y2, dt, w))


def _hold_sampler():
    w = pl.Weight(2.0, (0.0, 0.5, 2.0), (0.8, 0.4))
    return abs(sim.sampler(np.full(65, 1.7), 2.0 / 64, w) - 1.7)


def _determinism():
    plant = pl.example_plant()
    ctrl, _ = _example_design()
    cfg = sim.SimConfig(tau=2.0, horizon=10)
    a, b = sim.run_closed_loop(plant, ctrl, cfg), sim.run_closed_loop(plant, ctrl, cfg)
    return int(np.count_nonzero(a.y != b.y) + np.count_nonzero(a.u != b.u))


def _backend_agreement():
    plant = pl.example_plant()
    ctrl, _ = _example_design()
    cfg = sim.SimConfig(tau=2.0, horizon=10)
    current = sim.backend()
    ys = []
    try:
        for name in sim.available_backends():
            sim.set_backend(name)
            ys.append(sim.run_closed_loop(plant, ctrl, cfg).y)
    finally:
        sim.set_backend(current)
    return float(max(np.abs(y - ys[0]).max() for y in ys))


def _steady_error():
    return sim.tracking_metrics(_example_trace()).steady_error


def _robust_steady_error():
    return sim.tracking_metrics(_example_trace(factor=1.02)).steady_error


def _tail_monotone():
    tr = _example_trace()
    sq = (tr.y - tr.config.y_ref) ** 2
    seg = 0.5 * (sq[1:] + sq[:-1]) * np.diff(tr.t)
    tail = np.cumsum(seg[::-1])[::-1]
    start = np.searchsorted(tr.t, 20.0)
    # count increases of the tail integral after the transient
    return int(np.count_nonzero(np.diff(tail[start:]) > 0))


def _discrete_steady_state():
    rng = np.random.default_rng(61)
    plant = random_discrete_plant(rng, 1)
    ctrl, _ = syn.synthesize_discrete(plant, (0.0,), a=0.0)
    tr = sim.run_discrete_loop(plant, ctrl, 1.0, 0.5, 600)
    x, xd = syn.steady_state(plant, ctrl, 1.0, 0.5)
    return float(max(np.abs(tr.x[-1] - x).max(), np.abs(tr.xd[-1] - xd).max()))


CHECKS = (
    Check("linalg.sqrt_inverse_diag", _sqrt_inverse_diag, 1e-12),
    Check("linalg.sqrt_inverse_random", _sqrt_inverse_random, 1e-10),
    Check("linalg.solve_residual", _solve_residual, 1e-10),
    Check("rational.hinf_exterior", _hinf_exterior, 1e-6),
    Check("nevanlinna.interior_residual", _np_residuals("interior"), nv.INTERIOR_RESIDUAL_TOL),
    Check("nevanlinna.boundary_value", _np_residuals("boundary_value"), nv.BOUNDARY_VALUE_TOL),
    Check("nevanlinna.boundary_derivative", _np_residuals("boundary_derivative"),
          nv.BOUNDARY_DERIVATIVE_TOL),
    Check("nevanlinna.pick_agreement", _pick_agreement, 0, scalable=False),
    Check("plant.gamma", _gamma_error, 5e-4),
    Check("plant.dc_gain", _dc_gain_error, 1e-12),
    Check("plant.discretization_identity", _discretization_identity, 1e-8),
    Check("plant.margin_ratio", _margin_ratio, 1.0, "<", scalable=False),
    Check("synthesis.controller_coefficients", _controller_coefficients, 0.02),
    Check("synthesis.internal_model", _internal_model, 1e-8),
    Check("synthesis.bezout", _bezout, syn.BEZOUT_TOL),
    Check("synthesis.mimo_internal_model", _mimo_internal_model, 1e-8),
    Check("synthesis.discrete_spectral_radius", _discrete_radius, 1.0, "<", scalable=False),
    Check("simulate.exp", _exp_error, 1e-8),
    Check("simulate.integrator_order", _integrator_order, 12.0, ">=", scalable=False),
    Check("simulate.sampler_linearity", _sampler_linearity, 1e-12),
    Check("simulate.hold_sampler", _hold_sampler, 1e-12),
    Check("simulate.determinism", _determinism, 0, scalable=False),
    Check("simulate.backend_agreement", _backend_agreement, 1e-12),
    Check("simulate.steady_error", _steady_error, 1e-3),
    Check("simulate.robust_steady_error", _robust_steady_error, 1e-2),
    Check("simulate.tail_integral_monotone", _tail_monotone, 0, scalable=False),
    Check("simulate.discrete_steady_state", _discrete_steady_state, 1e-8),
)


def _compare(value, bound, sense):
    if sense == "<=":
        return value <= bound
    if sense == "<":
        return value < bound
    return value >= bound


def run_checks(profile="default", checks=CHECKS, select=None):
    """Run the suite.

    Parameters
    ----------
    profile : {'default', 'strict'}
    select : iterable of str, optional
        Prefixes of check names to run.

    Returns
    -------
    list of CheckResult
        An exception inside a check counts as a failure with the message
        recorded.
    """
    factor = PROFILES[profile]
    out = []
    for chk in checks:
        if select and not any(chk.name.startswith(s) for s in select):
            continue
        bound = chk.bound * factor if chk.scalable else chk.bound
        t0 = time.perf_counter()
        try:
            value = float(chk.func())
            passed, err = bool(_compare(value, bound, chk.sense)), ""
        except (RegsynError, ValueError, ArithmeticError) as exc:
            value, passed, err = float("nan"), False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(chk.name, value, bound, chk.sense, passed,
                               time.perf_counter() - t0, err))
    return out
