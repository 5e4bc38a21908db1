import numpy as np
import pytest

from epurify.channels import choi_of_identity, depolarize_subsystems, sym_mixed_state
from epurify.energy import random_epo_choi, spectral_decompose
from epurify.linalg import kron, psd_sqrt, spectral_norm
from epurify.montecarlo import monte_carlo_validate
from epurify.purification import (
    PurificationProblem,
    baseline_fidelity,
    build_fidelity_operator,
    build_probability_operator,
    max_success_scale,
    nogo_condition,
    protocol_from_sigma,
    protocol_metrics,
    structural_operators,
    top_eigenstate_protocol,
)
from epurify.rng import HaarSampler

from conftest import random_real_symmetric


def make_problem(h, gamma, d=2, n=2):
    return PurificationProblem(d=d, n=n, gamma=gamma, energy=spectral_decompose(h))


def test_baseline_values():
    assert baseline_fidelity(1.0, 2) == 1.0
    assert baseline_fidelity(0.0, 2) == 0.5
    assert baseline_fidelity(0.5, 2) == 0.75


def test_baseline_is_state_independent():
    # the single-copy overlap <psi|N(psi)|psi> is constant over Haar samples
    sampler = HaarSampler(2, seed=3)
    gamma = 0.5
    for v in sampler.state_vectors(200):
        psi = np.outer(v, v.conj())
        noisy = (1 - gamma) * np.eye(2) / 2 + gamma * psi
        overlap = float(np.trace(psi @ noisy).real)
        assert abs(overlap - baseline_fidelity(gamma, 2)) < 1e-12


def test_gamma_zero_rejected():
    with pytest.raises(ValueError):
        make_problem(np.eye(4), 0.0)


def test_complex_hamiltonian_rejected():
    y = np.array([[0, -1j], [1j, 0]])
    h = np.kron(y, np.eye(2)) + np.kron(np.eye(2), np.diag([0.0, 1.0]))
    with pytest.raises(ValueError, match="real symmetric"):
        make_problem(h, 0.5)


def test_fidelity_operator_basics(ising_structural_n2):
    a = ising_structural_n2.fidelity_op
    assert np.trace(a).real > 0
    assert spectral_norm(a - a.conj().T) <= 1e-12
    assert np.linalg.eigvalsh(a)[0] >= -1e-12


def test_fidelity_operator_monte_carlo_oracle(ising_structural_n2, ising_es_n2):
    # the Haar oracle pins the subsystem ordering of both structural operators
    s = ising_structural_n2
    for stream in range(2):
        choi = random_epo_choi(ising_es_n2, seed=1234, stream=stream)
        mc = monte_carlo_validate(choi, d=2, n=2, gamma=0.5, samples=100_000, seed=77, stream=stream)
        tr_a = float(np.trace(choi @ s.fidelity_op).real)
        tr_c = float(np.trace(choi @ s.probability_op).real)
        assert abs(tr_a - mc.numerator_mean) <= 3 * mc.numerator_se + 1e-9
        assert abs(tr_c - mc.probability_mean) <= 3 * mc.probability_se + 1e-9


def test_noiseless_single_copy_kernel_peaks_at_one():
    problem = PurificationProblem(d=2, n=1, gamma=1.0, energy=spectral_decompose(np.eye(2)))
    s = structural_operators(problem)
    assert abs(s.max_fidelity - 1.0) <= 1e-10


def test_probability_operator_degenerate_h():
    problem = make_problem(np.eye(4), 0.5)
    c = build_probability_operator(problem)
    y = depolarize_subsystems(sym_mixed_state(2, 2), (2, 2), [0, 1], 0.5)
    assert np.abs(c - kron([y.T, np.eye(4)])).max() <= 1e-12


def test_probability_operator_support_matches_constraint(ising_structural_n2, ising_es_n2):
    assert ising_structural_n2.support_rank == ising_es_n2.choi_projector_rank


def test_max_fidelity_at_least_baseline():
    for seed in range(5):
        h = random_real_symmetric(4, 300 + seed)
        s = structural_operators(make_problem(h, 0.35))
        assert s.max_fidelity >= s.baseline - 1e-9


def test_max_fidelity_one_when_noiseless():
    for h in [np.eye(4), random_real_symmetric(4, 310)]:
        s = structural_operators(make_problem(h, 1.0))
        assert abs(s.max_fidelity - 1.0) <= 1e-8


def test_nogo_noiseless_degenerate():
    s = structural_operators(make_problem(np.eye(4), 1.0))
    report = nogo_condition(s)
    assert report.nogo
    assert not report.operator_applicable


def test_nogo_false_for_unconstrained():
    s = structural_operators(make_problem(np.eye(4), 0.5))
    report = nogo_condition(s)
    assert not report.nogo
    assert not report.operator_nogo
    assert report.routes_agree


def test_nogo_true_for_single_copy():
    problem = PurificationProblem(d=2, n=1, gamma=0.5, energy=spectral_decompose(np.diag([0.0, 1.0])))
    s = structural_operators(problem)
    report = nogo_condition(s)
    assert report.nogo
    assert report.operator_nogo
    assert report.routes_agree
    assert abs(s.max_fidelity - s.baseline) <= 1e-10


def test_protocol_metrics_identity(ising_structural_n2):
    s = ising_structural_n2
    fidelity, probability = protocol_metrics(choi_of_identity(4), s)
    assert abs(probability - 1.0) <= 1e-9
    assert abs(fidelity - s.baseline) <= 1e-9


def test_protocol_metrics_rejects_non_epo(ising_structural_n2):
    bad = np.eye(16)
    with pytest.raises(ValueError, match="energy preserving"):
        protocol_metrics(bad, ising_structural_n2)


def test_random_protocols_never_beat_max(ising_structural_n2, ising_es_n2):
    s = ising_structural_n2
    for stream in range(25):
        choi = random_epo_choi(ising_es_n2, seed=555, stream=stream)
        fidelity, probability = protocol_metrics(choi, s)
        assert fidelity <= s.max_fidelity + 1e-9
        assert probability >= 0


def test_protocol_from_top_eigenstate(ising_structural_n2):
    s = ising_structural_n2
    choi = top_eigenstate_protocol(s)
    fidelity, probability = protocol_metrics(choi, s)
    assert abs(fidelity - s.max_fidelity) <= 1e-9
    v = s.top_basis[:, -1]
    sigma = np.outer(v, v.conj())
    assert abs(probability - max_success_scale(sigma, s)) <= 1e-9


def test_protocol_family_metrics_formula(ising_structural_n2):
    # fidelity = Tr(sigma K) and probability = q, for admissible (sigma, q)
    s = ising_structural_n2
    gen = np.random.Generator(np.random.Philox(key=42))
    supp = s.prob_sqrt @ s.prob_inv_sqrt
    for _ in range(10):
        g = gen.standard_normal((16, 16)) + 1j * gen.standard_normal((16, 16))
        sigma = supp @ (g @ g.conj().T) @ supp
        sigma = (sigma + sigma.conj().T) / 2
        sigma /= np.trace(sigma).real
        q = 0.5 * max_success_scale(sigma, s)
        choi = protocol_from_sigma(sigma, q, s)
        fidelity, probability = protocol_metrics(choi, s)
        assert abs(probability - q) <= 1e-9
        assert abs(fidelity - np.trace(sigma @ s.kernel).real) <= 1e-9
        assert fidelity <= s.max_fidelity + 1e-9


def test_protocol_from_sigma_inverse_construction(ising_structural_n2):
    # the state recovered from the identity channel regenerates it exactly
    s = ising_structural_n2
    gamma_id = choi_of_identity(4)
    p_id = float(np.trace(gamma_id @ s.probability_op).real)
    sigma = s.prob_sqrt @ gamma_id @ s.prob_sqrt / p_id
    choi = protocol_from_sigma(sigma, p_id, s)
    assert spectral_norm(choi - gamma_id) <= 1e-9


def test_protocol_from_sigma_rejects_oversized_q(ising_structural_n2):
    s = ising_structural_n2
    v = s.top_basis[:, -1]
    sigma = np.outer(v, v.conj())
    bound = max_success_scale(sigma, s)
    with pytest.raises(ValueError, match="admissible interval"):
        protocol_from_sigma(sigma, bound * 1.01, s)


def test_protocol_from_sigma_rejects_support_leak():
    # gamma = 1 leaves the probability operator rank deficient, so a full-rank
    # state must be rejected
    s = structural_operators(make_problem(np.eye(4), 1.0))
    sigma = np.eye(16) / 16
    with pytest.raises(ValueError, match="support"):
        protocol_from_sigma(sigma, 0.1, s)


def test_fidelity_interval_is_reachable(ising_structural_n2):
    # convex mixing steers the fidelity to any target between baseline and max
    s = ising_structural_n2
    gamma_id = choi_of_identity(4)
    p_id = float(np.trace(gamma_id @ s.probability_op).real)
    sigma_id = s.prob_sqrt @ gamma_id @ s.prob_sqrt / p_id
    v = s.top_basis[:, -1]
    sigma_top = np.outer(v, v.conj())
    target = 0.5 * (s.baseline + s.max_fidelity)
    lam = (target - s.baseline) / (s.max_fidelity - s.baseline)
    sigma = lam * sigma_top + (1 - lam) * sigma_id
    choi = protocol_from_sigma(sigma, 0.9 * max_success_scale(sigma, s), s)
    fidelity, _ = protocol_metrics(choi, s)
    assert abs(fidelity - target) <= 1e-9


def test_degenerate_h_reduction_matches_constraint_free_route():
    # independent implementation that never builds the constraint projector
    gamma, d, n = 0.6, 2, 2
    problem = make_problem(np.eye(4), gamma)
    s = structural_operators(problem)

    dims = (d,) * (n + 1)
    from epurify.linalg import partial_transpose, psd_sqrt_pinv

    x = sym_mixed_state(d, n + 1)
    x = depolarize_subsystems(x, dims, range(n), gamma)
    a0 = kron([partial_transpose(x, dims, range(n)), np.eye(d ** (n - 1))])
    y = depolarize_subsystems(sym_mixed_state(d, n), (d,) * n, range(n), gamma)
    c0 = kron([y.T, np.eye(d**n)])
    inv_half = psd_sqrt_pinv(c0)
    k0 = inv_half @ a0 @ inv_half
    f0 = float(np.linalg.eigvalsh((k0 + k0.conj().T) / 2)[-1])

    assert np.abs(s.fidelity_op - a0).max() <= 1e-12
    assert np.abs(s.probability_op - c0).max() <= 1e-10
    assert abs(s.max_fidelity - f0) <= 1e-10
    assert spectral_norm(s.kernel - (k0 + k0.conj().T) / 2) <= 1e-10


def test_support_projector_equals_constraint_projector_for_noisy(ising_structural_n2, ising_es_n2):
    s = ising_structural_n2
    supp = s.prob_sqrt @ s.prob_inv_sqrt
    assert spectral_norm(supp - ising_es_n2.choi_projector) <= 1e-9
