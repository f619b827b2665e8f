import numpy as np
import pytest

from bregman_kaczmarz.systems import QuadraticSystem


def random_quadratic(m, n, seed, symmetric=False):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n, n))
    if symmetric:
        A = 0.5 * (A + A.transpose(0, 2, 1))
    b = rng.standard_normal((m, n))
    c = rng.standard_normal(m)
    return QuadraticSystem(A, b, c)


def affine_system(B, y):
    """F(x) = Bx - y as a QuadraticSystem with zero quadratic part."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = B.shape
    return QuadraticSystem(np.zeros((m, n, n)), B, -y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
