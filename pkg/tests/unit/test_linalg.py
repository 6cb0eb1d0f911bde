import numpy as np
import pytest
from scipy.linalg import eigvalsh

from conftest import random_hermitian
from qexclusion.core.linalg import (
    hermitian_eigen,
    heisenberg_weyl,
    inverse_sqrt_psd,
    is_hermitian,
    kron,
    outer,
    partial_trace_left,
    psd_project,
    unvectorize,
    vectorize,
)
from qexclusion.errors import DimensionMismatch, NotHermitian


class TestHermitianEigen:
    def test_diagonal_input(self):
        eig = hermitian_eigen(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 2.0, 3.0], atol=1e-12)

    def test_pauli_x(self):
        eig = hermitian_eigen([[0, 1], [1, 0]])
        np.testing.assert_allclose(eig.eigenvalues, [-1.0, 1.0], atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_eigen([[0, 1], [0, 0]])

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            hermitian_eigen(np.zeros((2, 3)))

    def test_characteristic_polynomial_roots(self, rng):
        h = random_hermitian(rng, 4)
        eig = hermitian_eigen(h, method="jacobi")
        roots = np.sort(np.real(np.roots(np.poly(h))))
        np.testing.assert_allclose(eig.eigenvalues, roots, atol=1e-7)

    @pytest.mark.parametrize("method", ["jacobi", "lapack", "auto"])
    def test_random_matrices_eigenpairs(self, rng, method):
        for _ in range(500):
            n = int(rng.integers(1, 9))
            h = random_hermitian(rng, n)
            eig = hermitian_eigen(h, method=method)
            scale = np.linalg.norm(h)
            for k in range(n):
                v = eig.eigenvectors[:, k]
                assert np.linalg.norm(h @ v - eig.eigenvalues[k] * v) <= 1e-9 * max(scale, 1.0)
            gram = eig.eigenvectors.conj().T @ eig.eigenvectors
            assert np.max(np.abs(gram - np.eye(n))) <= 1e-10
            np.testing.assert_allclose(eig.eigenvalues, eigvalsh(h), atol=1e-9 * max(scale, 1.0))

    def test_degenerate_spectrum(self):
        eig = hermitian_eigen(np.eye(5) * 2.5, method="jacobi")
        np.testing.assert_allclose(eig.eigenvalues, [2.5] * 5)
        assert eig.sweeps == 0

    def test_weyl_inequality(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 7))
            a = random_hermitian(rng, n)
            b = random_hermitian(rng, n)
            sum_values = hermitian_eigen(a + b).eigenvalues
            a_values = hermitian_eigen(a).eigenvalues
            b_min = hermitian_eigen(b).lambda_min
            assert np.all(sum_values >= a_values + b_min - 1e-9)


class TestPartialTrace:
    def test_identity_factor(self, rng):
        b = random_hermitian(rng, 3)
        np.testing.assert_allclose(partial_trace_left(kron(np.eye(2), b), 2, 3), 2 * b, atol=1e-12)

    def test_product_operator(self, rng):
        a = random_hermitian(rng, 3)
        b = random_hermitian(rng, 2)
        np.testing.assert_allclose(partial_trace_left(kron(a, b), 3, 2), np.trace(a) * b, atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_unitary_vectorization_gives_identity(self, d):
        v = heisenberg_weyl(d, 1, 1)
        vec = vectorize(v)
        np.testing.assert_allclose(partial_trace_left(outer(vec), d, d), np.eye(d), atol=1e-12)

    def test_trace_preserved(self, rng):
        m = random_hermitian(rng, 12)
        assert abs(np.trace(partial_trace_left(m, 3, 4)) - np.trace(m)) <= 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            partial_trace_left(np.eye(5), 2, 3)


class TestVectorize:
    def test_identity_is_maximally_entangled(self):
        expected = np.zeros(9)
        expected[[0, 4, 8]] = 1.0
        np.testing.assert_array_equal(vectorize(np.eye(3)), expected)

    def test_scalar(self):
        np.testing.assert_array_equal(vectorize([[2 + 1j]]), [2 + 1j])

    def test_row_major_and_inverse(self):
        m = np.arange(6).reshape(2, 3)
        np.testing.assert_array_equal(vectorize(m), np.arange(6))
        np.testing.assert_array_equal(unvectorize(vectorize(m), 2, 3), m)

    def test_linear(self, rng):
        a = rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3))
        np.testing.assert_array_equal(vectorize(2 * a - 3j * b), 2 * vectorize(a) - 3j * vectorize(b))

    def test_shifted_vector_orthogonal_to_identity(self):
        w = heisenberg_weyl(3, 1, 1)
        assert abs(np.vdot(vectorize(np.eye(3)), vectorize(w))) <= 1e-12


class TestHeisenbergWeyl:
    def test_clock_trace_vanishes(self):
        assert abs(np.trace(heisenberg_weyl(3, 1, 0))) <= 1e-12

    def test_identity_shift(self):
        np.testing.assert_array_equal(heisenberg_weyl(4, 0, 0), np.eye(4))

    @pytest.mark.parametrize("d,z,x", [(2, 1, 1), (3, 2, 1), (5, 3, 4)])
    def test_unitary(self, d, z, x):
        w = heisenberg_weyl(d, z, x)
        np.testing.assert_allclose(w.conj().T @ w, np.eye(d), atol=1e-12)


class TestPsdHelpers:
    def test_projection_clips_negative_part(self):
        projected = psd_project(np.diag([1.0, -2.0, 0.5]))
        np.testing.assert_allclose(projected, np.diag([1.0, 0.0, 0.5]), atol=1e-12)

    def test_batched_projection(self, rng):
        stack = np.stack([random_hermitian(rng, 3) for _ in range(4)])
        projected = psd_project(stack)
        for block in projected:
            assert is_hermitian(block)
            assert np.linalg.eigvalsh(block).min() >= -1e-12

    def test_inverse_sqrt(self, rng):
        a = random_hermitian(rng, 4)
        pd = a @ a.conj().T + np.eye(4)
        root = inverse_sqrt_psd(pd)
        np.testing.assert_allclose(root @ pd @ root, np.eye(4), atol=1e-9)
