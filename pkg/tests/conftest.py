import numpy as np
import pytest

from onebit_idd.ldpc import construct_code


@pytest.fixture(scope="session")
def code512():
    """The production (3,6)-regular n=512 rate-1/2 code."""
    return construct_code(512, 0.5, seed=0)


@pytest.fixture(scope="session")
def small_code():
    """A small regular code for fast decoder tests."""
    return construct_code(48, 0.5, seed=3)


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random Hermitian PSD matrix with strictly positive diagonal."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    c = a @ a.conj().T / dim + 0.1 * np.eye(dim)
    return 0.5 * (c + c.conj().T)


def sample_gaussian(rng: np.random.Generator, c: np.ndarray,
                    n: int) -> np.ndarray:
    """n draws of a circularly symmetric Gaussian with covariance c,
    returned as (dim, n)."""
    dim = c.shape[0]
    chol = np.linalg.cholesky(c)
    z = (rng.standard_normal((dim, n)) + 1j * rng.standard_normal((dim, n)))
    return chol @ z / np.sqrt(2.0)
