import numpy as np
import pytest

from qexclusion.config import get_tolerances


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tolerances():
    return get_tolerances("default")


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def s3_elements():
    """S3 as r^a s^b with index 2a + b; element 0 is the identity."""
    return [(a, b) for a in range(3) for b in range(2)]


def s3_cayley():
    elements = s3_elements()
    # s r^c = r^{-c} s
    return [[2 * ((a + (-1) ** b * c) % 3) + (b + e) % 2 for c, e in elements] for a, b in elements]


def s3_block_matrices():
    """Trivial, sign and standard irreps stacked along the diagonal, in that order."""
    angle = 2 * np.pi / 3
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    reflection = np.diag([1.0, -1.0])
    matrices = []
    for a, b in s3_elements():
        u = np.zeros((4, 4), dtype=np.complex128)
        u[0, 0] = 1.0
        u[1, 1] = (-1) ** b
        u[2:, 2:] = np.linalg.matrix_power(rotation, a) @ np.linalg.matrix_power(reflection, b)
        matrices.append(u)
    return matrices


def as_pairs(matrix):
    return [[[float(np.real(v)), float(np.imag(v))] for v in row] for row in matrix]
