import numpy as np
import pytest

from regsyn import linalg
from regsyn.errors import (BoundViolated, DimensionMismatch, KernelNotOneDimensional,
                           NotHermitian, NotPositiveDefinite, Singular)


def _random_spd(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return X @ X.conj().T + 0.5 * np.eye(n)


def test_sqrt_inverse_identity():
    np.testing.assert_allclose(linalg.hermitian_sqrt_inverse(np.eye(2)), np.eye(2), atol=1e-15)


def test_sqrt_inverse_diagonal():
    S = linalg.hermitian_sqrt_inverse(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(S, np.diag([0.5, 1.0 / 3.0]), atol=1e-14)


def test_sqrt_inverse_of_defect():
    # (1 - 0.36)^(-1/2) = 1 / 0.8
    E = np.array([[0.6]])
    S = linalg.hermitian_sqrt_inverse(np.eye(1) - E @ E.conj().T)
    assert S[0, 0] == pytest.approx(1.25, abs=1e-14)


def test_sqrt_inverse_random(rng):
    for n in (1, 3, 6, 12):
        M = _random_spd(rng, n)
        S = linalg.hermitian_sqrt_inverse(M)
        np.testing.assert_allclose(S, S.conj().T, atol=1e-12)
        np.testing.assert_allclose(S @ M @ S, np.eye(n), atol=1e-10)


def test_sqrt_inverse_errors():
    with pytest.raises(NotHermitian):
        linalg.hermitian_sqrt_inverse(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        linalg.hermitian_sqrt_inverse(np.diag([1.0, -1.0]))


def test_tangential_blocks_defect(rng):
    for _ in range(20):
        E = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        E *= rng.uniform(0.1, 0.95) / np.linalg.norm(E, 2)
        A, B, C, D = linalg.tangential_blocks(E)
        np.testing.assert_allclose(A @ (np.eye(3) - E @ E.conj().T) @ A, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(D @ (np.eye(2) - E.conj().T @ E) @ D, np.eye(2), atol=1e-10)


def test_hermitian_eig_reconstructs(rng):
    for n in (2, 5, 20):
        M = _random_spd(rng, n) - 2 * np.eye(n)
        w, V = linalg.hermitian_eig(M)
        np.testing.assert_allclose(V @ np.diag(w) @ V.conj().T, M, atol=1e-12 * np.abs(M).max())
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(M), atol=1e-11)


@pytest.mark.parametrize("M, expected", [
    ([[1.0]], True),
    ([[0.0]], False),
    ([[2.0, 1.0], [1.0, 2.0]], True),
    ([[1.0, 1.0], [1.0, 0.2533]], False),
    ([[1.0, 2.0], [0.0, 1.0]], False),
])
def test_is_positive_definite(M, expected):
    assert linalg.is_positive_definite(np.array(M)) is expected


def test_is_positive_definite_nonsquare():
    with pytest.raises(DimensionMismatch):
        linalg.is_positive_definite(np.ones((2, 3)))


def test_solve_examples(rng):
    B = rng.normal(size=(3, 2))
    np.testing.assert_array_equal(linalg.solve(np.eye(3), B), B)
    np.testing.assert_allclose(linalg.solve(np.diag([2.0, 4.0]), [[2.0], [4.0]]), [[1.0], [1.0]])


def test_solve_residual(rng):
    for _ in range(20):
        U, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
        V, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        M = U @ np.diag(np.logspace(0, -rng.uniform(0, 6), 5)) @ V
        B = rng.normal(size=(5, 3))
        X = linalg.solve(M, B)
        assert np.linalg.norm(M @ X - B) <= 1e-9 * np.linalg.norm(M, 2) * np.linalg.norm(B)


def test_solve_singular():
    with pytest.raises(Singular):
        linalg.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_inverse_perturbation_bound_examples():
    assert linalg.inverse_perturbation_bound(1.0, 0.0) == 1.0
    assert linalg.inverse_perturbation_bound(2.0, 0.25) == pytest.approx(4.0)
    with pytest.raises(BoundViolated):
        linalg.inverse_perturbation_bound(1.0, 1.0)


def test_inverse_perturbation_bound_holds(rng):
    for _ in range(200):
        V = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        nvi = np.linalg.norm(np.linalg.inv(V), 2)
        Dl = rng.normal(size=(4, 4))
        Dl *= rng.uniform(0.0, 0.99) / (nvi * np.linalg.norm(Dl, 2))
        bound = linalg.inverse_perturbation_bound(nvi, np.linalg.norm(Dl, 2))
        assert np.linalg.norm(np.linalg.inv(V + Dl), 2) <= bound * (1 + 1e-12)


def test_kernel_vector_examples():
    np.testing.assert_allclose(linalg.kernel_vector(np.zeros((1, 1))), [1.0])
    np.testing.assert_allclose(linalg.kernel_vector(np.diag([0.0, 1.0])), [1.0, 0.0], atol=1e-15)
    psi = linalg.kernel_vector(np.ones((2, 2)))
    np.testing.assert_allclose(psi, np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-15)


def test_kernel_vector_properties(rng):
    tol = 1e-9
    for _ in range(20):
        X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        U, s, Vh = np.linalg.svd(X)
        s[-1] = 0.0
        M = U @ np.diag(s) @ Vh
        psi = linalg.kernel_vector(M, tol)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
        assert np.linalg.norm(M @ psi) <= 10 * tol * max(1.0, s[0])
        k = np.argmax(np.abs(psi))
        assert psi[k].imag == 0 and psi[k].real > 0


def test_kernel_vector_rejects_two_dimensional_kernel():
    with pytest.raises(KernelNotOneDimensional):
        linalg.kernel_vector(np.diag([0.0, 0.0, 1.0]))
    with pytest.raises(KernelNotOneDimensional):
        linalg.kernel_vector(np.eye(2))


def test_conjugate_transpose_involution(rng):
    M = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    np.testing.assert_array_equal(M.conj().T.conj().T, M)
