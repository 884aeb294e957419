import numpy as np
import pytest

from regsyn import linalg
from regsyn import nevanlinna as nv
from regsyn.errors import NotSolvable
from regsyn.generators import (boundary_only_problem, random_boundary_data,                                random_interior_problem, random_np_problem)
from regsyn.nevanlinna import BoundaryDatum, InteriorDatum, InterpolationProblem
from regsyn.realization import StateSpace
from regsyn.rational import ScalarRational


def circle_norm(T, points=2048):
    """Largest singular value of ``T`` on a uniform circle grid (independent of the solver)."""
    zs = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    return max(np.linalg.norm(np.atleast_2d(T(z)), 2) for z in zs)


def failing_pair():
    return [InteriorDatum(0.0, [1.0], [0.0]), InteriorDatum(0.5, [1.0], [0.9])]


def test_pick_examples():
    np.testing.assert_allclose(nv.pick_matrix([InteriorDatum(0.0, [1.0], [0.0])]), [[1.0]])
    np.testing.assert_allclose(nv.pick_matrix([InteriorDatum(0.5, [1.0], [0.5])]), [[1.0]])
    P = nv.pick_matrix(failing_pair())
    np.testing.assert_allclose(P, [[1.0, 1.0], [1.0, 0.19 / 0.75]])
    assert not linalg.is_positive_definite(P)


def test_pick_hermitian(rng):
    for _ in range(20):
        prob = random_interior_problem(rng)
        for zao in (False, True):
            if zao and any(abs(d.alpha) < 1e-14 for d in prob.interior):
                continue
            P = nv.pick_matrix(prob.interior, zao)
            np.testing.assert_array_equal(P, P.conj().T)


def test_solvable_examples(rng):
    assert nv.solvable(InterpolationProblem(1, 1))
    assert nv.solvable(boundary_only_problem(rng, 1, 1))
    bd = [BoundaryDatum(1.0, [[0.2]], [[3.0]]), BoundaryDatum(-1.0, [[-0.5]])]
    assert not nv.solvable(InterpolationProblem(1, 1, failing_pair(), bd))


def test_data_invariants():
    with pytest.raises(ValueError):
        InteriorDatum(0.3, [0.5], [0.5])
    with pytest.raises(ValueError):
        InteriorDatum(1.0, [1.0], [0.0])
    with pytest.raises(ValueError):
        BoundaryDatum(1.0, [[1.0]])
    with pytest.raises(ValueError):
        BoundaryDatum(0.9, [[0.0]])
    with pytest.raises(ValueError):
        InterpolationProblem(1, 1, [InteriorDatum(0.0, [1.0], [0.0])], (), True)


def test_solvable_ignores_boundary(rng):
    for _ in range(50):
        prob = random_interior_problem(rng, 2, 2)
        bd = random_boundary_data(rng, prob.p, prob.q, int(rng.integers(1, 4)))
        with_bd = InterpolationProblem(prob.p, prob.q, prob.interior, bd)
        assert nv.solvable(with_bd) == nv.solvable(prob)


def test_interior_step_alpha_zero():
    prob = InterpolationProblem(1, 1, [InteriorDatum(0.0, [1.0], [0.0])])
    reduced, rec = nv.interior_step(prob)
    assert reduced.empty
    np.testing.assert_array_equal(rec.E, [[0.0]])
    for w in (0.3, 0.2 + 0.5j):
        np.testing.assert_allclose(rec.X(w), [[w]])


def test_interior_step_X_unitary_on_circle(rng):
    for _ in range(20):
        prob = random_np_problem(rng)
        if not prob.interior:
            continue
        _, rec = nv.interior_step(prob)
        for lam in np.exp(2j * np.pi * rng.random(5)):
            X = rec.X(lam)
            np.testing.assert_allclose(np.linalg.inv(X), X.conj().T, atol=1e-10)


def test_interior_step_preserves_solvability(rng):
    checked = 0
    for _ in range(100):
        prob = random_interior_problem(rng)
        if len(prob.interior) < 2 or not nv.solvable(prob):
            continue
        reduced, _ = nv.interior_step(prob)
        assert nv.solvable(reduced)
        checked += 1
    assert checked > 5
    with pytest.raises(NotSolvable):
        nv.interior_step(InterpolationProblem(1, 1, failing_pair()))


def test_interior_step_forward_check(rng):
    # any contraction solving the reduced problem lifts to the parent
    for _ in range(20):
        prob = random_np_problem(rng)
        if not prob.interior or prob.zero_at_origin:
            continue
        reduced, rec = nv.interior_step(InterpolationProblem(prob.p, prob.q, prob.interior[:1]))
        phi = StateSpace.static(0.5 * rng.normal(size=(prob.p, prob.q)) / max(prob.p, prob.q) / 3)
        T = rec.apply(phi)
        d = prob.interior[0]
        np.testing.assert_allclose(d.xi.conj() @ T(1.0 / d.alpha), d.eta.conj(), atol=1e-8)


def test_boundary_step_trivial():
    prob = InterpolationProblem(1, 1, (), [BoundaryDatum(1.0, [[0.0]], [[0.0]])])
    reduced, rec = nv.boundary_step(prob)
    for d in reduced.boundary:
        np.testing.assert_allclose(d.F, 0.0, atol=1e-15)
    T = rec.apply(StateSpace.static(np.zeros((1, 1))))
    res = nv.realization_residuals(T, prob)
    assert res["boundary_value"] < 1e-12 and res["boundary_derivative"] < 1e-12


def test_boundary_step_values_contract(rng):
    for _ in range(30):
        prob = boundary_only_problem(rng)
        reduced, rec = nv.boundary_step(prob)
        assert rec.eps > 0
        for d in reduced.boundary:
            assert np.linalg.norm(d.F, 2) < 1.0


def test_solve_empty():
    Phi = nv.solve(InterpolationProblem(2, 3))
    np.testing.assert_array_equal(Phi(0.3), np.zeros((2, 3)))


def test_solve_single_interior():
    prob = InterpolationProblem(1, 1, [InteriorDatum(0.5, [1.0], [0.3])])
    Phi, info = nv.solve(prob, full_output=True)
    assert Phi(0.5)[0, 0] == pytest.approx(0.3, abs=1e-8)
    assert info["norm"] < 1.0
    assert circle_norm(info["realization"]) < 1.0


def test_solve_not_solvable():
    with pytest.raises(NotSolvable):
        nv.solve(InterpolationProblem(1, 1, failing_pair()))


def test_worked_example_data_have_a_witness():
    # printed interpolant in the exterior variable z; the solver works with w = 1/z
    Y = ScalarRational([-0.7602, 0.7712], [0.0, -0.7328, 1.0])
    chi = 1.9822
    F1, eta = Y(1.0), Y(chi)
    assert F1 == pytest.approx(0.04117, abs=1e-4)
    assert eta == pytest.approx(0.3103, abs=1e-3)
    prob = InterpolationProblem(1, 1, [InteriorDatum(1.0 / chi, [1.0], [np.conj(eta)])],
                                [BoundaryDatum(1.0, [[F1]])], zero_at_origin=True)
    assert nv.solvable(prob)
    T, info = nv.solve_realization(prob)
    res = info["residuals"]
    assert res["interior"] < 1e-8 and res["boundary_value"] < 1e-6 and res["origin"] < 1e-8
    assert circle_norm(T) < 1.0
    # conjugate-symmetric data give a real solution
    Phi = nv.solve(prob)
    assert Phi.max_imag_coefficient() < 1e-10


def test_solve_forward_check_suite(rng):
    for _ in range(40):
        prob = random_np_problem(rng)
        T, info = nv.solve_realization(prob)
        res = nv.realization_residuals(T, prob)
        assert res["interior"] < 1e-8
        assert res["boundary_value"] < 1e-6
        assert res["boundary_derivative"] < 1e-5
        assert res["origin"] < 1e-8
        assert circle_norm(T) < 1.0 - 1e-6


def test_solve_rational_form(rng):
    for _ in range(20):
        prob = random_np_problem(rng, 2, 2, 2, 1)
        try:
            Phi = nv.solve(prob)
        except nv.NumericalBreakdown:
            continue
        res = nv.residuals(Phi, prob)
        assert res["interior"] < 1e-8 and res["boundary_value"] < 1e-6


def test_tangential_to_matrix():
    xi, eta = np.array([1.0, 1.0j]), np.array([0.3])
    F = nv.tangential_to_matrix(xi, eta)
    np.testing.assert_allclose(xi.conj() @ F, eta.conj())


def test_without_zero_at_origin_data():
    prob = InterpolationProblem(1, 1, [InteriorDatum(0.5, [1.0], [0.2])],
                                [BoundaryDatum(1j, [[0.1]], [[0.3]])], True)
    red = nv.without_zero_at_origin(prob)
    d, b = red.interior[0], red.boundary[0]
    np.testing.assert_allclose(d.xi, [0.5])
    np.testing.assert_allclose(b.F, [[0.1 / 1j]])
    np.testing.assert_allclose(b.G, [[0.3 / 1j - 0.1 / 1j ** 2]])
