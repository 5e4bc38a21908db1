import numpy as np
import pytest

from epurify.channels import choi_from_kraus, choi_of_identity
from epurify.energy import (
    hamiltonian_from_pauli_terms,
    ising_all_to_all,
    is_energy_preserving,
    random_epo_choi,
    spectral_decompose,
)
from epurify.linalg import kron, partial_trace, spectral_norm

from conftest import random_psd, random_real_symmetric

X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def test_fully_degenerate_hamiltonian():
    es = spectral_decompose(np.eye(4))
    assert len(es.eigenvalues) == 1
    assert np.allclose(es.projectors[0], np.eye(4))
    assert np.allclose(es.choi_projector, np.eye(16))


def test_nondegenerate_qubit():
    es = spectral_decompose(np.diag([0.0, 1.0]))
    assert len(es.eigenvalues) == 2
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = 1.0
    assert np.allclose(es.choi_projector, expected)


def test_ising_n2_clusters_match_exact_grouping():
    h = ising_all_to_all(2, -0.5, -0.3)
    es = spectral_decompose(h)
    # oracle: group exact eigenvalues of a direct diagonalization
    w = np.linalg.eigvalsh(h)
    groups = []
    for val in w:
        if groups and abs(val - groups[-1][-1]) < 1e-10:
            groups[-1].append(val)
        else:
            groups.append([val])
    assert len(es.eigenvalues) == len(groups)
    assert es.cluster_sizes == [len(g) for g in groups]


def test_projector_resolution_and_orthogonality():
    h = ising_all_to_all(3, -0.5, -0.3)
    es = spectral_decompose(h)
    total = sum(es.projectors)
    assert spectral_norm(total - np.eye(8)) <= 1e-10
    for i, p in enumerate(es.projectors):
        for j, q in enumerate(es.projectors):
            expected = p if i == j else np.zeros_like(p)
            assert spectral_norm(p @ q - expected) <= 1e-10
    pi = es.choi_projector
    assert spectral_norm(pi @ pi - pi) <= 1e-10
    assert spectral_norm(pi - pi.conj().T) <= 1e-10
    recon = sum(e * p for e, p in zip(es.eigenvalues, es.projectors))
    assert spectral_norm(h - recon) <= 1e-8 * max(1.0, spectral_norm(h))


def test_clustering_merges_near_degeneracies():
    h = np.diag([0.0, 1e-12, 1.0])
    es = spectral_decompose(h, cluster_tol=1e-8)
    assert es.cluster_sizes == [2, 1]


def test_ising_single_site():
    h = ising_all_to_all(1, -0.5, -0.3)
    assert np.allclose(h, -0.5 * np.eye(2) - 0.3 * X)


def test_ising_two_sites_expansion():
    # expand the double sum by hand: i=j terms give 2*J*I, the (1,2) pair twice
    h = ising_all_to_all(2, -0.5, -0.3)
    expected = -0.5 * (2 * np.eye(4) + 2 * kron([Z, Z])) - 0.3 * (kron([X, np.eye(2)]) + kron([np.eye(2), X]))
    assert np.allclose(h, expected)
    assert spectral_norm(h - h.conj().T) == 0.0


def test_eigenbasis_choi_elements_sandwich():
    # diagonal-pair elements |i><j| (x) |i><j| survive the pinch for every i, j
    # (the identity channel must stay energy preserving); elements pairing
    # mismatched clusters across the input/output factors are annihilated
    h = ising_all_to_all(2, -0.5, -0.3)
    es = spectral_decompose(h)
    pi = es.choi_projector
    v = es.eigenbasis
    for i in range(4):
        for j in range(4):
            vi, vj = v[:, i], v[:, j]
            elem = np.kron(np.outer(vi, vj.conj()), np.outer(vi, vj.conj()))
            assert spectral_norm(pi @ elem @ pi - elem) <= 1e-10
    for i in range(4):
        for k in range(4):
            if es.cluster_labels[i] == es.cluster_labels[k]:
                continue
            vi, vk = v[:, i], v[:, k]
            mixed = np.kron(np.outer(vi, vi.conj()), np.outer(vk, vk.conj()))
            assert spectral_norm(pi @ mixed @ pi) <= 1e-10


def test_identity_channel_is_energy_preserving():
    h = random_real_symmetric(4, 71)
    es = spectral_decompose(h)
    report = is_energy_preserving(choi_of_identity(4), es)
    assert report.accepted
    assert report.commutator_residual <= 1e-9 * 4


def test_bit_flip_violates_diagonal_hamiltonian():
    es = spectral_decompose(np.diag([0.0, 1.0]))
    choi = choi_from_kraus([X], 2)
    report = is_energy_preserving(choi, es)
    assert not report.accepted
    assert report.sandwich_residual > 0.1


def test_pinched_operator_is_energy_preserving():
    h = ising_all_to_all(2, -0.5, -0.3)
    es = spectral_decompose(h)
    g = random_psd(16, 81)
    pinched = es.choi_projector @ g @ es.choi_projector
    assert is_energy_preserving(pinched, es).accepted


def test_commuting_kraus_give_energy_preserving_choi():
    h = np.diag([0.0, 1.0, 1.0, 2.0])
    es = spectral_decompose(h)
    # block-diagonal (hence commuting) Kraus operators
    blocks = [random_real_symmetric(1, 91), random_real_symmetric(2, 92), random_real_symmetric(1, 93)]
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = blocks[0][0, 0]
    m[1:3, 1:3] = blocks[1]
    m[3, 3] = blocks[2][0, 0]
    m = m / (2 * spectral_norm(m))
    assert spectral_norm(m @ h - h @ m) <= 1e-12
    choi = choi_from_kraus([m], 4)
    assert is_energy_preserving(choi, es, tol=1e-9).accepted


def test_constant_hamiltonian_accepts_everything():
    es = spectral_decompose(3.7 * np.eye(4))
    assert np.allclose(es.choi_projector, np.eye(16))
    choi = random_epo_choi(spectral_decompose(np.eye(4)), seed=3)
    assert is_energy_preserving(choi, es).accepted


@pytest.mark.parametrize("seed", range(4))
def test_random_epo_choi_is_valid(seed, ising_es_n2):
    choi = random_epo_choi(ising_es_n2, seed=seed)
    assert is_energy_preserving(choi, ising_es_n2, tol=1e-9).accepted
    marg = partial_trace(choi, (4, 4), keep=[0])
    w = np.linalg.eigvalsh(marg)
    assert w[-1] <= 1 + 1e-9
    assert np.linalg.eigvalsh(choi)[0] >= -1e-10 * spectral_norm(choi)


def test_random_epo_choi_unrestricted_when_degenerate():
    es = spectral_decompose(np.eye(4))
    choi = random_epo_choi(es, seed=4)
    # a Wishart sample pinched by the identity keeps full rank
    assert np.linalg.matrix_rank(choi, tol=1e-10) == 16


def test_pauli_hamiltonian_parsing():
    h = hamiltonian_from_pauli_terms([(-0.5, "ZZ"), (-0.3, "XI"), (-0.3, "IX")])
    expected = -0.5 * kron([Z, Z]) - 0.3 * (kron([X, np.eye(2)]) + kron([np.eye(2), X]))
    assert np.allclose(h, expected)
    with pytest.raises(ValueError):
        hamiltonian_from_pauli_terms([(1.0, "ZZ"), (1.0, "Z")])
    with pytest.raises(ValueError):
        hamiltonian_from_pauli_terms([])
