import numpy as np
import pytest

from epurify.rng import philox_generator


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    gen = philox_generator(seed)
    m = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    return (m + m.conj().T) / 2


def random_real_symmetric(dim: int, seed: int) -> np.ndarray:
    gen = philox_generator(seed)
    m = gen.standard_normal((dim, dim))
    return (m + m.T) / 2


def random_unitary(dim: int, seed: int) -> np.ndarray:
    gen = philox_generator(seed)
    m = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_psd(dim: int, seed: int) -> np.ndarray:
    m = random_hermitian(dim, seed)
    return m @ m.conj().T


def random_state(dim: int, seed: int) -> np.ndarray:
    rho = random_psd(dim, seed)
    return rho / np.trace(rho).real


@pytest.fixture(scope="session")
def ising_es_n2():
    from epurify import ising_all_to_all, spectral_decompose

    return spectral_decompose(ising_all_to_all(2, -0.5, -0.3))


@pytest.fixture(scope="session")
def ising_structural_n2(ising_es_n2):
    from epurify import PurificationProblem, structural_operators

    problem = PurificationProblem(d=2, n=2, gamma=0.5, energy=ising_es_n2)
    return structural_operators(problem)


@pytest.fixture(scope="session")
def ising_solution_n2(ising_structural_n2):
    from epurify import solve_max_success

    return solve_max_success(ising_structural_n2)
