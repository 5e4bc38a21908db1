import math

import numpy as np
import pytest

from epurify.channels import (
    apply_channel_via_choi,
    choi_from_action,
    choi_from_kraus,
    choi_of_identity,
    cptn_violation,
    depolarizing_apply,
    depolarizing_choi,
    pauli_string_operator,
    permutation_operator,
    sym_mixed_state,
    sym_projector,
)
from epurify.linalg import partial_trace, spectral_norm
from epurify.rng import HaarSampler, haar_random_state

from conftest import random_hermitian, random_state, random_unitary


def test_depolarizing_identity_at_gamma_one():
    x = random_hermitian(3, 1)
    assert np.allclose(depolarizing_apply(x, 1.0, 3), x)


def test_depolarizing_replacement_at_gamma_zero():
    rho = random_state(2, 2)
    assert np.allclose(depolarizing_apply(rho, 0.0, 2), np.eye(2) / 2)


def test_depolarizing_half():
    rho = np.diag([1.0, 0.0])
    assert np.allclose(depolarizing_apply(rho, 0.5, 2), np.diag([0.75, 0.25]))


def test_depolarizing_rejects_bad_gamma():
    with pytest.raises(ValueError):
        depolarizing_apply(np.eye(2), 1.5, 2)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.7, 1.0])
def test_depolarizing_preserves_structure(gamma):
    rho = random_state(4, 3)
    out = depolarizing_apply(rho, gamma, 4)
    assert abs(np.trace(out) - 1.0) < 1e-12
    assert spectral_norm(out - out.conj().T) < 1e-12
    assert np.linalg.eigvalsh(out)[0] >= -1e-12


def test_sym_projector_dimensions():
    assert abs(np.trace(sym_projector(2, 2)) - 3.0) < 1e-12
    assert np.allclose(sym_projector(2, 1), np.eye(2))
    p3 = sym_projector(2, 3)
    assert abs(np.trace(p3) - 4.0) < 1e-12
    assert spectral_norm(p3 @ p3 - p3) <= 1e-12


def test_sym_projector_commutes_with_permutations_and_collective_unitaries():
    p = sym_projector(2, 3)
    for perm in [(1, 0, 2), (2, 0, 1)]:
        w = permutation_operator(2, 3, perm)
        assert spectral_norm(p @ w - w @ p) <= 1e-10
    u = random_unitary(2, 11)
    u3 = np.kron(np.kron(u, u), u)
    assert spectral_norm(p @ u3 - u3 @ p) <= 1e-10


def test_sym_mixed_state_small_cases():
    assert np.allclose(sym_mixed_state(2, 1), np.eye(2) / 2)
    assert np.allclose(sym_mixed_state(2, 2), sym_projector(2, 2) / 3)


def test_sym_mixed_state_is_haar_second_moment():
    sampler = HaarSampler(2, seed=123)
    vecs = sampler.state_vectors(100_000)
    pair = np.einsum("ta,tb->tab", vecs, vecs).reshape(-1, 4)
    mean = np.einsum("ti,tj->ij", pair, pair.conj()) / len(vecs)
    assert np.abs(mean - sym_mixed_state(2, 2)).max() < 5e-3


def test_haar_state_is_projector_and_deterministic():
    psi = haar_random_state(3, seed=7)
    assert abs(np.trace(psi) - 1.0) < 1e-12
    assert spectral_norm(psi @ psi - psi) <= 1e-12
    assert np.allclose(psi, haar_random_state(3, seed=7))
    assert not np.allclose(psi, haar_random_state(3, seed=8))


def test_haar_first_moment():
    sampler = HaarSampler(2, seed=99)
    vecs = sampler.state_vectors(100_000)
    mean = np.einsum("ta,tb->ab", vecs, vecs.conj()) / len(vecs)
    assert np.abs(mean - np.eye(2) / 2).max() < 5e-3


def test_choi_of_identity():
    g = choi_of_identity(2)
    assert abs(np.trace(g) - 2.0) < 1e-12
    assert np.linalg.matrix_rank(g) == 1
    rho = random_state(2, 21)
    assert np.allclose(apply_channel_via_choi(g, rho, 2), rho)
    assert np.allclose(partial_trace(g, (2, 2), keep=[0]), np.eye(2))


def test_choi_action_two_route_consistency():
    choi = depolarizing_choi(0.3, 2)
    rho = random_hermitian(2, 31)
    direct = depolarizing_apply(rho, 0.3, 2)
    via = apply_channel_via_choi(choi, rho, 2)
    assert np.abs(direct - via).max() < 1e-12


def test_replacement_channel_choi():
    ket0 = np.zeros((2, 2))
    ket0[0, 0] = 1.0
    choi = choi_from_action(lambda x: np.trace(x) * ket0, 2)
    rho = random_state(2, 41)
    assert np.allclose(apply_channel_via_choi(choi, rho, 2), ket0)


def test_choi_roundtrip_on_random_action():
    k = random_hermitian(2, 51) / 3
    choi = choi_from_action(lambda x: k @ x @ k.conj().T, 2)
    rho = random_hermitian(2, 52)
    assert np.abs(apply_channel_via_choi(choi, rho, 2) - k @ rho @ k.conj().T).max() < 1e-12


def test_choi_from_kraus_matches_action():
    kraus = [np.array([[1.0, 0.0], [0.0, 0.5]]), np.array([[0.0, 0.3], [0.0, 0.0]])]
    choi = choi_from_kraus(kraus, 2)
    rho = random_state(2, 61)
    expected = sum(m @ rho @ m.conj().T for m in kraus)
    assert np.abs(apply_channel_via_choi(choi, rho, 2) - expected).max() < 1e-12


def test_cptn_violation_detects_overweight():
    g = choi_of_identity(2)
    assert cptn_violation(g, 2) <= 1e-12
    assert cptn_violation(1.5 * g, 2) > 0.4


def test_pauli_string_operator():
    assert np.allclose(pauli_string_operator("ZZ"), np.kron(np.diag([1, -1]), np.diag([1, -1])))
    x = np.array([[0, 1], [1, 0]])
    assert np.allclose(pauli_string_operator("XI"), np.kron(x, np.eye(2)))
    with pytest.raises(ValueError):
        pauli_string_operator("XQ")


def test_box_muller_moments():
    from epurify.rng import complex_gaussians, philox_generator

    z = complex_gaussians(philox_generator(5), (200_000,))
    assert abs(z.real.mean()) < 0.01
    assert abs(z.real.var() - 1.0) < 0.02
    assert abs(z.imag.var() - 1.0) < 0.02
    assert abs((z.real * z.imag).mean()) < 0.01
