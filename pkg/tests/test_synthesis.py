import numpy as np
import pytest

from regsyn import plant as pl
from regsyn import synthesis as syn
from regsyn.errors import RepeatedUnstablePole, Singular, SingularAtBoundary
from regsyn.generators import THETA_SETS, random_discrete_plant
from regsyn.nevanlinna import solvable
from regsyn.rational import RationalMatrix, ScalarRational, canonicalize, roots
from regsyn.verify import PRINTED_K

PRINTED_Y = ScalarRational([-0.7602, 0.7712], [0.0, -0.7328, 1.0])


@pytest.fixture(scope="module")
def pair(modal):
    return syn.coprime_factorize(pl.unstable_tf_dt(modal), 0.9)


def _scalar(F):
    return F[0, 0] if isinstance(F, RationalMatrix) else F


def _closed_form_K(pair, R, Y):
    N, D = _scalar(pair.N), _scalar(pair.D)
    return Y * D / (ScalarRational([1.0]) - (N + D * R) * Y)


def test_coprime_example(pair, modal):
    chi = np.exp(2 * modal.gammas[0].real)
    D, N = _scalar(pair.D), _scalar(pair.N)
    np.testing.assert_allclose(pair.chi, [chi])
    for z in (2.0, -1.5, 0.3 + 3j):
        assert D(z) == pytest.approx((z - chi) / (z - 0.9))
        assert N(z) == pytest.approx(modal.alpha[0] / (z - 0.9))
    assert pair.verify(pl.unstable_tf_dt(modal)) < 1e-9


def test_coprime_zero():
    pair = syn.coprime_factorize(ScalarRational([0.0]), 0.9)
    assert pair.chi.size == 0
    assert _scalar(pair.N).is_zero()
    assert _scalar(pair.D) == ScalarRational([1.0])


def test_coprime_two_poles():
    G = ScalarRational([1.0], [-2.0, 1.0]) + ScalarRational([1.0], [-3.0, 1.0])
    pair = syn.coprime_factorize(G, 0.9)
    zeros = np.sort(roots(_scalar(pair.D).num).real)
    np.testing.assert_allclose(zeros, [2.0, 3.0], atol=1e-10)
    for c in pair.chi:
        assert abs(_scalar(pair.D).derivative()(c)) > 1e-3
    assert pair.verify(G) < 1e-9


def test_coprime_repeated_pole():
    with pytest.raises(RepeatedUnstablePole):
        syn.coprime_factorize(ScalarRational([1.0], [4.0, -4.0, 1.0]), 0.9)


def test_coprime_matrix(rng):
    plant = random_discrete_plant(rng, 2)
    Gp, _ = plant.split()
    pair = syn.coprime_factorize(Gp, 0.5)
    assert pair.verify(Gp) < 1e-9
    for c, psi in zip(pair.chi, pair.psi):
        assert np.linalg.norm(pair.D_ss(c).conj().T @ psi) < 1e-8


def test_delta_star(pair, example):
    g = pl.unstable_spectrum(example)[0].real
    expect = (1 - 0.9) * 0.4 / (np.exp(2 * g) - 1)
    assert syn.delta_star(pair, [[[-2.5]]]) == pytest.approx(expect, rel=1e-10)
    assert expect == pytest.approx(0.0407, abs=1e-4)


def test_delta_star_trivial():
    one = syn.coprime_factorize(ScalarRational([0.0]), 0.9)
    assert syn.delta_star(one, [[[2.0]]]) == pytest.approx(0.5)
    two = syn.coprime_factorize(RationalMatrix.zeros(2, 2), 0.9)
    assert syn.delta_star(two, [np.diag([2.0, 4.0])]) == pytest.approx(0.5)
    with pytest.raises(SingularAtBoundary):
        syn.delta_star(one, [[[0.0]]])


def test_stabilization_bound(pair):
    M = syn.stabilization_bound_M(pair)
    assert M <= 1.0
    assert syn.stabilization_bound_M(pair, override=1.0) == 1.0
    # the interior problem scaled by 1/M is solvable
    interior = syn.assemble_interpolation(pair, ScalarRational([0.0]), M).interior
    from regsyn.nevanlinna import InterpolationProblem
    assert solvable(InterpolationProblem(1, 1, interior, (), True))
    none = syn.coprime_factorize(ScalarRational([0.0]), 0.9)
    assert syn.stabilization_bound_M(none) == 1.0


def test_assemble_example(pair, modal):
    R = pl.stable_approximant_R(modal)
    prob = syn.assemble_interpolation(pair, R, 1.0)
    assert prob.zero_at_origin
    (b,) = prob.boundary
    assert b.lam == 1.0
    assert b.F[0, 0].real == pytest.approx(0.0412, abs=1e-4)
    assert abs(b.F[0, 0] - PRINTED_Y(1.0)) < 1e-4
    (d,) = prob.interior
    chi = pair.chi[0]
    assert d.alpha == pytest.approx(1.0 / chi)
    target = d.eta[0].conj() / d.xi[0].conj()
    assert target.real == pytest.approx(0.3104, abs=2e-4)
    assert abs(target - PRINTED_Y(chi)) < 2e-3


def test_assemble_empty():
    pair = syn.coprime_factorize(ScalarRational([0.0]), 0.9)
    prob = syn.assemble_interpolation(pair, ScalarRational([0.0]), 1.0, thetas=())
    assert not prob.interior and not prob.boundary


def test_assemble_derivative_chain_rule(pair, modal):
    # target Y+'(1) = -W (D+ + H' W) with H = N+ + D+ R and W = 1/H, mapped to
    # w = 1/z by the chain rule; H' by a central difference
    R = pl.stable_approximant_R(modal)
    prob = syn.assemble_interpolation(pair, R, 1.0, siso_shortcut=False)
    (b,) = prob.boundary
    H = lambda z: _scalar(pair.N)(z) + _scalar(pair.D)(z) * R(z)
    h = 1e-6
    dH = (H(1.0 + h) - H(1.0 - h)) / (2 * h)
    W = 1.0 / H(1.0)
    dY = -W * (_scalar(pair.D)(1.0) + dH * W)
    assert abs(b.G[0, 0] - (-dY * 1.0 ** 2)) < 1e-6


def test_printed_interpolant_reproduces_controller(pair, modal):
    R = pl.stable_approximant_R(modal)
    # printed coefficients cancel only to about 1e-4
    K = canonicalize(_closed_form_K(pair, R, PRINTED_Y), cancel_tol=1e-2)
    assert K.den_degree == 2
    num = K.num.real / K.den[-1].real
    den = K.den.real / K.den[-1].real
    got = np.concatenate([num, den[:-1]])
    ref = np.concatenate([PRINTED_K["num"], PRINTED_K["den"][:-1]])
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 0.02


def test_synthesized_controller(design):
    ctrl, rep = design
    K = ctrl.K[0, 0]
    assert rep.status == "success"
    num = K.num.real / K.den[-1].real
    den = K.den.real / K.den[-1].real
    np.testing.assert_allclose(num, PRINTED_K["num"], rtol=0.02)
    np.testing.assert_allclose(den[:-1], PRINTED_K["den"][:-1], rtol=0.02)
    assert abs(np.polynomial.polynomial.polyval(1.0, K.den)) < 1e-8
    assert abs(K(2.0)) == pytest.approx(0.3106, rel=0.02)
    assert ctrl.is_real and ctrl.order == 2


def test_controller_self_consistency(design, pair, modal):
    ctrl, rep = design
    Y = ScalarRational(rep.thresholds["Y_plus"]["num"], rep.thresholds["Y_plus"]["den"])
    R = pl.stable_approximant_R(modal)
    closed = _closed_form_K(pair, R, Y)
    assert abs(ctrl.K[0, 0](2.0) - closed(2.0)) < 1e-10
    assert abs(ctrl.transfer(2.0)[0, 0] - closed(2.0)) < 1e-10


def test_report_invariants(design):
    _, rep = design
    assert rep.residuals["bezout"] < 1e-8
    assert rep.residuals["interior"] < 1e-8
    assert rep.residuals["boundary_value"] < 1e-6
    assert rep.stability["small_gain"] < 1.0
    assert rep.M == 1.0 or rep.M <= 1.0
    assert rep.M1 == max(2 * rep.delta_star, rep.M)
    (im,) = rep.stability["internal_model"]
    assert im["distance"] < 1e-8 and im["geometric_multiplicity"] >= 1


def test_mimo_path_on_scalar_plant(example):
    ctrl, rep = syn.synthesize_delay(example, siso=False)
    (im,) = ctrl.internal_model()
    assert im["distance"] < 1e-8
    assert rep.residuals["bezout"] < 1e-8
    assert rep.residuals["boundary_derivative"] < 1e-5


def test_taylor_approximant():
    one_over_z = lambda z: 1.0 / z
    R = syn.taylor_approximant(one_over_z, 1, radius=1.5)
    np.testing.assert_allclose(R[0, 0].num, [1.0], atol=1e-14)
    np.testing.assert_allclose(R[0, 0].den, [0.0, 1.0], atol=1e-14)
    c = syn.taylor_approximant(lambda z: np.full(z.shape, 0.7 - 0.2j), 0)
    assert abs(c[0, 0](3.0) - (0.7 - 0.2j)) < 1e-14
    g = lambda z: 1.0 / (z - 0.5)
    zs = np.exp(2j * np.pi * np.arange(512) / 512)
    errs = []
    for N in range(2, 10):
        R = syn.taylor_approximant(g, N, radius=1.0, points=256)
        errs.append(np.abs(g(zs) - R[0, 0](zs)).max())
    np.testing.assert_allclose(np.array(errs[1:]) / errs[:-1], 0.5, rtol=1e-6)


def test_closed_loop_stability_trivial(rng):
    plant = syn.DiscretePlant(np.diag([0.5, -0.3]), rng.normal(size=(2, 1)), rng.normal(size=(1, 2)),
                              [[0.0]])
    ctrl = syn.DiscreteController(P=[[0.8]], Q=[[1.0]], R=[[0.0]])
    assert syn.closed_loop_stability_check(plant, ctrl) == pytest.approx(0.8)
    integ = syn.DiscretePlant([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    dead = syn.DiscreteController(P=[[0.0]], Q=[[1.0]], R=[[-1.0]])
    np.testing.assert_array_equal(syn.closed_loop_matrix(integ, dead), [[1.0, -1.0], [-1.0, 0.0]])
    # eigenvalues of [[1, -1], [-1, 0]] are (1 +- sqrt 5) / 2
    assert syn.closed_loop_stability_check(integ, dead) == pytest.approx((1 + np.sqrt(5)) / 2)


@pytest.mark.parametrize("k", range(3))
def test_discrete_synthesis(k):
    rng = np.random.default_rng(500 + k)
    thetas = THETA_SETS[k]
    plant = random_discrete_plant(rng, 1 + k % 2)
    ctrl, rep = syn.synthesize_discrete(plant, thetas, a=0.0)
    assert syn.closed_loop_stability_check(plant, ctrl) < 1.0
    assert rep.residuals["bezout"] < 1e-8
    for im in ctrl.internal_model(thetas):
        assert im["distance"] < 1e-8 and im["geometric_multiplicity"] >= plant.p


def test_gang_of_four_stable():
    rng = np.random.default_rng(77)
    plant = random_discrete_plant(rng, 1)
    ctrl, _ = syn.synthesize_discrete(plant, (0.0,), a=0.0)
    # all four closed-loop maps share the realization A_e, so their poles are inside the disk
    Ae = syn.closed_loop_matrix(plant, ctrl)
    assert np.abs(np.linalg.eigvals(Ae)).max() < 1.0
    z = 1.7 * np.exp(0.4j)
    G, K = plant.transfer(z), ctrl.transfer(z)
    S = np.linalg.inv(np.eye(1) + G @ K)
    n = plant.n
    Bu = np.vstack([plant.B, -ctrl.Q @ plant.D])
    Cy = np.hstack([plant.C, plant.D @ ctrl.R])
    # from input disturbance to output: G (I + K G)^{-1}
    lhs = Cy @ np.linalg.solve(z * np.eye(Ae.shape[0]) - Ae, Bu) + plant.D
    np.testing.assert_allclose(lhs, G @ np.linalg.inv(np.eye(1) + K @ G), atol=1e-10)
    assert np.isfinite(S).all() and n > 0


def test_siso_and_mimo_paths_agree_on_stability():
    rng = np.random.default_rng(88)
    plant = random_discrete_plant(rng, 1)
    for siso in (True, False):
        ctrl, rep = syn.synthesize_discrete(plant, (0.0,), a=0.0, siso=siso)
        assert syn.closed_loop_stability_check(plant, ctrl) < 1.0
        assert ctrl.internal_model()[0]["distance"] < 1e-8


def test_steady_state(rng):
    plant = random_discrete_plant(np.random.default_rng(61), 1)
    ctrl, _ = syn.synthesize_discrete(plant, (0.0,), a=0.0)
    x0, xd0 = syn.steady_state(plant, ctrl, 0.0, 0.0)
    assert not np.any(x0) and not np.any(xd0)
    x1, xd1 = syn.steady_state(plant, ctrl, 1.0, 0.5)
    x2, xd2 = syn.steady_state(plant, ctrl, 2.0, 1.0)
    np.testing.assert_allclose(x2, 2 * x1, atol=1e-12)
    np.testing.assert_allclose(xd2, 2 * xd1, atol=1e-12)
    # the output equals the reference at the equilibrium
    u = ctrl.R @ xd1 + 0.5
    np.testing.assert_allclose(plant.C @ x1 + plant.D @ u, [1.0], atol=1e-10)
    from regsyn.simulate import run_discrete_loop
    tr = run_discrete_loop(plant, ctrl, 1.0, 0.5, 1000)
    np.testing.assert_allclose(tr.x[-1], x1, atol=1e-8)
    np.testing.assert_allclose(tr.xd[-1], xd1, atol=1e-8)


def test_steady_state_singular():
    integ = syn.DiscretePlant([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(Singular):
        syn.steady_state(integ, syn.DiscreteController(P=[[1.0]], Q=[[0.0]], R=[[0.0]]), 1.0, 0.0)
