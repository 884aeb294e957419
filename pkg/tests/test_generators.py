import numpy as np

from regsyn import generators as gen
from regsyn.nevanlinna import solvable


def test_np_problems_are_solvable(rng):
    for _ in range(50):
        prob = gen.random_np_problem(rng)
        assert prob.p <= 3 and prob.q <= 3 and len(prob.interior) <= 4 and len(prob.boundary) <= 3
        assert solvable(prob)


def test_interior_problems_mix_outcomes(rng):
    outcomes = {solvable(gen.random_interior_problem(rng)) for _ in range(100)}
    assert outcomes == {True, False}


def test_contraction_norm(rng):
    M = gen.contraction(rng, 3, 2, 0.6)
    assert abs(np.linalg.norm(M, 2) - 0.6) < 1e-12


def test_finite_plant_assumptions(rng):
    for _ in range(20):
        A, b, c, w = gen.random_finite_plant(rng)
        assert np.abs(np.linalg.eigvals(A)).min() >= 0.1
        assert abs(w.total() - 1.0) < 1e-12
        assert abs(c @ np.linalg.solve(A, b)) >= 0.05


def test_discrete_plant_separation(rng):
    for p in (1, 2):
        plant = gen.random_discrete_plant(rng, p)
        ev = np.linalg.eigvals(plant.A)
        un = ev[np.abs(ev) > 1]
        assert 1 <= un.size <= 2
        z = gen.transmission_zeros(plant.A, plant.B, plant.C, plant.D)
        if z.size:
            assert np.abs(np.subtract.outer(un, z)).min() >= 0.2


def test_exosystem_signal(rng):
    sig = gen.exosystem_signal(rng, (0.0, np.pi), 2)
    vals = np.array([sig(k) for k in range(4)])
    assert vals.shape == (4, 2) and np.isrealobj(vals)
    # constant plus alternating part: period two
    np.testing.assert_allclose(vals[0], vals[2])
