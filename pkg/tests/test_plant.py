import numpy as np
import pytest

from regsyn import plant as pl
from regsyn.errors import AssumptionViolated, MultiplicityDetected, ParseError
from regsyn.generators import random_finite_plant
from regsyn.rational import ScalarRational


def finite_plant(A, b=None, c=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    b = np.ones(n) if b is None else b
    c = np.ones(n) if c is None else c
    return pl.DelayPlant(A=(A,), delays=(), b=b, c=(c,), output_delays=(0.0,))


def test_char_matrix(example):
    np.testing.assert_allclose(pl.char_matrix(example, 0.0), [[-0.4]])
    s = 1e6
    np.testing.assert_allclose(pl.char_matrix(example, s) / s, [[1.0]], rtol=1e-6)


def test_unstable_spectrum_example(example):
    g = pl.unstable_spectrum(example)
    assert g.shape == (1,)
    assert abs(g[0].imag) < 1e-12
    assert g[0].real == pytest.approx(0.3421, abs=5e-4)
    assert abs(pl.det_delta(example, g[0])) < 1e-10
    # scalar closed form g(s) = s - 0.2 - 0.2 exp(-s)
    assert abs(g[0] - 0.2 - 0.2 * np.exp(-g[0])) < 1e-12


def test_unstable_spectrum_simple_cases():
    assert pl.unstable_spectrum(finite_plant(-np.eye(2))).size == 0
    np.testing.assert_allclose(pl.unstable_spectrum(finite_plant([[0.5]])), [0.5])
    g = pl.unstable_spectrum(finite_plant([[0.1, -2.0], [2.0, 0.1]]))
    np.testing.assert_allclose(np.sort_complex(g), [0.1 - 2j, 0.1 + 2j], atol=1e-10)


def test_unstable_spectrum_rejects_double_zero():
    with pytest.raises(MultiplicityDetected):
        pl.unstable_spectrum(finite_plant(0.5 * np.eye(2)))


def test_modal_data_example(example, modal):
    g = modal.gammas[0].real
    assert modal.d[0].real == pytest.approx(1.0 + 0.2 * np.exp(-g), abs=1e-12)
    assert modal.d[0].real == pytest.approx(1.1421, abs=1e-4)
    assert modal.beta[0].real == pytest.approx((np.exp(2 * g) - 1) / (2 * g), abs=1e-12)
    assert modal.beta[0].real == pytest.approx(1.4355, abs=1e-4)
    assert modal.kappa[0].real == pytest.approx(0.8462, abs=1e-4)
    assert modal.alpha[0].real == pytest.approx(3.487, abs=1e-3)
    # residue: exp(-0.1 g) / d for the scalar plant
    assert modal.kappa[0].real == pytest.approx(np.exp(-0.1 * g) / (1 + 0.2 * np.exp(-g)), abs=1e-12)


def test_transfer_G(example, modal):
    assert pl.transfer_G(example, 0.0) == -2.5
    assert abs(pl.transfer_G(example, 1e8)) < 1e-7
    Gp = pl.unstable_tf_ct(modal)
    om = np.linspace(-1e3, 1e3, 20001)
    gap = max(abs(pl.transfer_G(example, 1j * w) - Gp(1j * w)) for w in om)
    assert gap < 0.1


def test_unstable_tf(modal):
    g = modal.gammas[0].real
    Gp = pl.unstable_tf_ct(modal)
    np.testing.assert_allclose(Gp.poles(), [g], atol=1e-12)
    Gt = pl.unstable_tf_dt(modal)
    np.testing.assert_allclose(Gt.poles(), [np.exp(2 * g)], atol=1e-10)
    # the printed 1.9822 comes from a 4-digit gamma
    assert Gt.poles()[0].real == pytest.approx(1.9822, abs=5e-4)
    assert Gt(3.0) == pytest.approx(modal.alpha[0] / (3.0 - np.exp(2 * g)))


def test_stable_approximant(modal):
    R = pl.stable_approximant_R(modal)
    assert R.num_degree == 0 and R.den_degree == 0
    expect = modal.kappa[0] * (modal.beta[0] - 1) / modal.gammas[0]
    assert R(1.0) == pytest.approx(expect)
    assert R(1.0).real == pytest.approx(1.0772, abs=1e-4)


def test_empty_modal_data():
    plant = finite_plant([[-1.0]])
    w = pl.Weight.constant(1.0)
    m = pl.modal_data(plant, np.zeros(0), 1.0, w)
    assert m.size == 0
    assert pl.unstable_tf_ct(m).is_zero()
    assert pl.unstable_tf_dt(m).is_zero()
    assert pl.stable_approximant_R(m).is_zero()


def test_solvability_margin_example(example, modal, design):
    rep = design[1]
    assert rep.thresholds["margin_rhs"] == pytest.approx(0.1018, abs=1e-3)
    assert rep.thresholds["margin_lhs"] < 0.1
    assert rep.thresholds["margin_ok"]


def test_solvability_margin_stable_plant():
    plant = finite_plant([[-1.0]])
    w = pl.Weight.constant(1.0)
    m = pl.modal_data(plant, np.zeros(0), 1.0, w)
    lhs, rhs, ok = pl.solvability_margin(plant, m, ScalarRational([1.0]), 1.0, 1.0, w,
                                         grid_points=20001)
    assert lhs == pytest.approx(1.0, rel=1e-9)
    assert rhs == pytest.approx(1.0 / (1.0 * 1.0 * w.l2_norm() * 1.0))


def test_solvability_margin_inflated(example, modal, design):
    rep = design[1]
    loud = example.perturbed(c=10.0)
    m = pl.modal_data(loud, modal.gammas, 2.0, example.weight)
    Dp = ScalarRational([-np.exp(2 * modal.gammas[0].real), 1.0], [-0.9, 1.0])
    lhs, rhs, ok = pl.solvability_margin(loud, m, Dp, rep.M1, 2.0, example.weight)
    assert not ok and lhs >= rhs


@pytest.mark.parametrize("A, tau, w, expect", [(-1.0, 1.0, 1.0, 1.0), (0.5, 2.0, 0.5, -2.0)])
def test_discretize_dc_identity(A, tau, w, expect):
    mats = pl.discretize_finite([[A]], [1.0], [1.0], tau, pl.Weight.constant(tau, w))
    assert pl.discrete_dc_gain(*mats)[0, 0] == pytest.approx(expect, abs=1e-9)


def test_discretize_closed_form():
    # scalar A = 0.5, tau = 2, w = 1/2: every block is an exponential integral
    a, tau = 0.5, 2.0
    At, Bt, Ct, Dt = pl.discretize_finite([[a]], [1.0], [1.0], tau, pl.Weight.constant(tau))
    assert At[0, 0] == pytest.approx(np.exp(a * tau))
    assert Bt[0, 0] == pytest.approx((np.exp(a * tau) - 1) / a)
    assert Ct[0, 0] == pytest.approx(0.5 * (np.exp(a * tau) - 1) / a)
    assert Dt[0, 0] == pytest.approx(0.5 * ((np.exp(a * tau) - 1) / a ** 2 - tau / a))


def test_discretize_random_stable(rng):
    for _ in range(5):
        A = rng.normal(size=(3, 3))
        A -= (np.abs(np.linalg.eigvals(A).real).max() + 0.5) * np.eye(3)
        b, c = rng.normal(size=3), rng.normal(size=3)
        w = pl.Weight(1.0, (0.0, 0.3, 1.0), (1.5, (1.0 - 0.45) / 0.7))
        coarse = pl.discretize_finite(A, b, c, 1.0, w)
        fine = pl.discretize_finite(A, b, c, 1.0, w, panels=128)
        for X, Y in zip(coarse, fine):
            np.testing.assert_allclose(X, Y, atol=1e-12)
        gain = pl.discrete_dc_gain(*coarse)[0, 0]
        assert abs(gain + c @ np.linalg.solve(A, b)) < 1e-8


def test_discretize_random_plants(rng):
    for _ in range(10):
        A, b, c, w = random_finite_plant(rng)
        gain = pl.discrete_dc_gain(*pl.discretize_finite(A, b, c, 1.0, w))[0, 0]
        assert abs(gain + c @ np.linalg.solve(A, b)) < 1e-8


def test_weight():
    w = pl.Weight.constant(2.0)
    assert w.values == (0.5,)
    assert w.total() == pytest.approx(1.0)
    assert w.l2_norm() == pytest.approx(np.sqrt(0.5))
    g = 0.3
    assert w.exp_moment(g) == pytest.approx((np.exp(2 * g) - 1) / (2 * g))


def test_check_assumptions(example):
    rep, gammas, modal = pl.check_assumptions(example, 2.0, example.weight)
    assert all(v["ok"] for v in rep.values())
    assert gammas.size == 1 and modal.size == 1


def test_check_assumptions_singular_dc():
    plant = pl.DelayPlant(A=(np.array([[0.2]]), np.array([[-0.2]])), delays=(1.0,), b=[1.0],
                          c=(np.array([1.0]),), output_delays=(0.0,))
    rep, _, _ = pl.check_assumptions(plant, 2.0, pl.Weight.constant(2.0))
    assert not rep["b1"]["ok"]
    with pytest.raises(AssumptionViolated):
        pl.check_assumptions(plant, 2.0, pl.Weight.constant(2.0), raise_on_failure=True)


def test_check_assumptions_resonant_sampling():
    # unstable pair 0.1 +- i pi with tau = 2 makes two sampled poles coincide
    plant = finite_plant([[0.1, -np.pi], [np.pi, 0.1]], b=[1.0, 0.0], c=[1.0, 0.0])
    rep, _, _ = pl.check_assumptions(plant, 2.0, pl.Weight.constant(2.0))
    assert not rep["b6"]["ok"] or not rep["b8"]["ok"]


def test_plant_delay_invariants():
    with pytest.raises(ValueError):
        pl.DelayPlant(A=(np.eye(1), np.eye(1), np.eye(1)), delays=(1.0, 0.5), b=[1.0],
                      c=(np.ones(1),), output_delays=(0.0,))
    with pytest.raises(ValueError):
        pl.DelayPlant(A=(np.eye(1), np.eye(1)), delays=(1.0,), b=[1.0],
                      c=(np.ones(1),), output_delays=(2.0,))


def test_load_example_file(example, tmp_path):
    from importlib import resources
    path = resources.files("regsyn") / "data" / "example.toml"
    loaded = pl.load_plant(str(path))
    assert loaded == example
    bad = tmp_path / "bad.toml"
    bad.write_text("n = 1\nA0 = [0.2, 0.1]\n")
    with pytest.raises(ParseError):
        pl.load_plant(str(bad))
    with pytest.raises(ParseError):
        pl.load_plant(str(tmp_path / "missing.toml"))
