"""Structural operators of universal purification under energy constraints.

For a depolarizing channel acting on each of ``n`` copies, every protocol that
keeps the first output subsystem has Haar-averaged success probability
``Tr(G C)`` and fidelity ``Tr(G A) / Tr(G C)``, where ``G`` is the Choi matrix
of the underlying energy-preserving operation and ``A``, ``C`` are fixed
operators assembled here.  The optimum over all such protocols is the largest
eigenvalue of ``C^{-1/2} A C^{-1/2}``, and the maximizers are parameterized by
states supported on its top eigenspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import choi_of_identity, depolarize_subsystems, sym_mixed_state
from .config import Tolerances
from .energy import EnergyStructure, is_energy_preserving
from .linalg import (
    as_operator,
    hermitize,
    kron,
    partial_trace,
    partial_transpose,
    psd_sqrt,
    psd_sqrt_pinv,
    spectral_norm,
    support_rank,
)

NOGO_TOL = 1e-8


@dataclass(frozen=True)
class PurificationProblem:
    """An ``n -> 1`` purification instance: local dimension, copy count,
    depolarizing strength and the energy structure of the n-copy Hamiltonian.

    ``gamma = 0`` destroys all input information and is rejected; the noiseless
    endpoint ``gamma = 1`` is admitted (useful in sweeps) even though the no-go
    characterization only applies strictly below it.
    """

    d: int
    n: int
    gamma: float
    energy: EnergyStructure

    def __post_init__(self):
        if self.d < 2 or self.n < 1:
            raise ValueError("need d >= 2 and n >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.energy.dim != self.d**self.n:
            raise ValueError(
                f"Hamiltonian dimension {self.energy.dim} does not match d**n = {self.d**self.n}"
            )
        h = self.energy.hamiltonian
        if np.abs(h.imag).max() > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError(
                "Hamiltonian must be real symmetric: with a genuinely complex H the "
                "computational-basis Choi constraint no longer matches the "
                "commuting-Kraus characterization"
            )

    @property
    def in_dims(self) -> tuple[int, ...]:
        return (self.d,) * self.n

    @property
    def out_dims(self) -> tuple[int, ...]:
        return (self.d,) * self.n


@dataclass(frozen=True)
class StructuralOperators:
    """Operator bundle that fully determines the optimal protocols.

    ``fidelity_op`` and ``probability_op`` act on the Choi space with
    subsystem order ``in_dims + out_dims``; ``kernel`` is the pinched ratio
    operator whose largest eigenvalue is ``max_fidelity``.  ``top_basis``
    holds an orthonormal basis of the top eigenspace (columns), and
    ``kept_out_slot`` is the index within ``out_dims`` of the purified output.
    """

    fidelity_op: np.ndarray
    probability_op: np.ndarray
    prob_sqrt: np.ndarray
    prob_inv_sqrt: np.ndarray
    kernel: np.ndarray
    top_projector: np.ndarray
    top_basis: np.ndarray
    max_fidelity: float
    baseline: float
    support_rank: int
    energy: EnergyStructure
    gamma: float
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    kept_out_slot: int
    tolerances: Tolerances

    @property
    def dim(self) -> int:
        return int(np.prod(self.in_dims))

    @property
    def top_rank(self) -> int:
        return self.top_basis.shape[1]


@dataclass(frozen=True)
class NogoReport:
    """Outcome of the purification existence test.

    ``operator_nogo`` evaluates the identity-channel invariance equation and is
    only meaningful for gamma < 1 (``operator_applicable``); the scalar test
    compares ``max_fidelity`` against the do-nothing baseline.
    """

    nogo: bool
    scalar_nogo: bool
    operator_nogo: bool
    operator_residual: float
    operator_applicable: bool

    @property
    def routes_agree(self) -> bool:
        return self.scalar_nogo == self.operator_nogo


def baseline_fidelity(gamma: float, d: int) -> float:
    """Haar-average fidelity of a single unpurified noisy copy."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return gamma + (1.0 - gamma) / d


def build_fidelity_operator(p: PurificationProblem) -> np.ndarray:
    """Operator ``A`` with ``Tr(G A) = integral of Tr[(psi (x) I) L(N(psi)^n)]``.

    Built from the (n+1)-copy symmetric state: noise on the first n factors,
    partial transpose over them, identity appended on the remaining outputs.
    The untouched symmetric factor becomes output slot 1 (the purified system).
    """
    d, n, gamma = p.d, p.n, p.gamma
    dims = (d,) * (n + 1)
    x = sym_mixed_state(d, n + 1)
    x = depolarize_subsystems(x, dims, range(n), gamma)
    x = partial_transpose(x, dims, range(n))
    if n > 1:
        x = kron([x, np.eye(d ** (n - 1))])
    return hermitize(x, tol=1e-10)


def build_probability_operator(p: PurificationProblem) -> np.ndarray:
    """Operator ``C``: the pinched transpose of the Haar-averaged noisy input."""
    d, n, gamma = p.d, p.n, p.gamma
    dims = (d,) * n
    y = sym_mixed_state(d, n)
    y = depolarize_subsystems(y, dims, range(n), gamma)
    c0 = kron([y.T, np.eye(d**n)])
    pi = p.energy.choi_projector
    return hermitize(pi @ c0 @ pi, tol=1e-10)


def structural_operators(
    p: PurificationProblem, tolerances: Tolerances = Tolerances()
) -> StructuralOperators:
    """Assemble the full operator bundle for a problem instance."""
    a = build_fidelity_operator(p)
    c = build_probability_operator(p)
    return assemble_structural_operators(
        a,
        c,
        energy=p.energy,
        gamma=p.gamma,
        baseline=baseline_fidelity(p.gamma, p.d),
        in_dims=p.in_dims,
        out_dims=p.out_dims,
        kept_out_slot=0,
        tolerances=tolerances,
    )


def assemble_structural_operators(
    fidelity_op: np.ndarray,
    probability_op: np.ndarray,
    *,
    energy: EnergyStructure,
    gamma: float,
    baseline: float,
    in_dims,
    out_dims,
    kept_out_slot: int,
    tolerances: Tolerances,
) -> StructuralOperators:
    """Shared assembly: pseudo-inverse square roots, ratio kernel, top eigenspace.

    Also used by the battery extension, which supplies its own operator pair on
    the enlarged space.
    """
    rank_tol = tolerances.rank_tol
    c_rank = support_rank(probability_op, rank_tol)
    if gamma < 1.0 and c_rank != energy.choi_projector_rank:
        raise ValueError(
            f"support of the probability operator has rank {c_rank} but the energy "
            f"constraint projector has rank {energy.choi_projector_rank}; this signals "
            f"an eigenvalue clustering failure (cluster_tol={energy.cluster_tol})"
        )
    c_inv_sqrt = psd_sqrt_pinv(probability_op, rank_tol)
    c_sqrt = psd_sqrt(probability_op, rank_tol)
    kernel = c_inv_sqrt @ fidelity_op @ c_inv_sqrt
    kernel = (kernel + kernel.conj().T) / 2
    w, v = np.linalg.eigh(kernel)
    max_fidelity = float(w[-1])
    if max_fidelity < baseline - 1e-9:
        raise ValueError(
            f"max fidelity {max_fidelity} fell below the baseline {baseline}; "
            "the do-nothing protocol should always be feasible"
        )
    top = w >= max_fidelity * (1.0 - tolerances.max_eig_tol)
    basis = v[:, top]
    return StructuralOperators(
        fidelity_op=fidelity_op,
        probability_op=probability_op,
        prob_sqrt=c_sqrt,
        prob_inv_sqrt=c_inv_sqrt,
        kernel=kernel,
        top_projector=basis @ basis.conj().T,
        top_basis=basis,
        max_fidelity=max_fidelity,
        baseline=baseline,
        support_rank=c_rank,
        energy=energy,
        gamma=gamma,
        in_dims=tuple(in_dims),
        out_dims=tuple(out_dims),
        kept_out_slot=kept_out_slot,
        tolerances=tolerances,
    )


def nogo_condition(s: StructuralOperators) -> NogoReport:
    """Decide whether no protocol can beat the do-nothing baseline.

    Evaluates the identity-invariance operator equation and the scalar test
    ``|max_fidelity - baseline| <= 1e-8``; for gamma < 1 the two must agree and
    a disagreement raises (it signals numerical degeneracy at the top
    eigenspace rather than a physical answer).  At gamma = 1 the operator
    route's hypothesis fails and only the scalar route is binding.
    """
    dim = s.dim
    gamma_id = choi_of_identity(dim)
    q = s.prob_inv_sqrt @ s.top_projector @ s.prob_sqrt
    residual = spectral_norm(q @ gamma_id @ q.conj().T - gamma_id)
    operator_nogo = bool(residual <= NOGO_TOL * dim)
    scalar_nogo = bool(abs(s.max_fidelity - s.baseline) <= NOGO_TOL)
    applicable = s.gamma < 1.0
    if applicable and operator_nogo != scalar_nogo:
        raise RuntimeError(
            f"no-go routes disagree (operator={operator_nogo}, scalar={scalar_nogo}, "
            f"residual={residual:.3e}); the top eigenspace is numerically degenerate"
        )
    return NogoReport(
        nogo=scalar_nogo,
        scalar_nogo=scalar_nogo,
        operator_nogo=operator_nogo,
        operator_residual=float(residual),
        operator_applicable=applicable,
    )


def protocol_metrics(choi: np.ndarray, s: StructuralOperators) -> tuple[float, float]:
    """Average fidelity and success probability of a protocol's Choi matrix."""
    choi = as_operator(choi)
    report = is_energy_preserving(choi, s.energy, s.tolerances.epo_tol)
    if not report.accepted:
        raise ValueError(
            f"choi matrix is not energy preserving (sandwich residual "
            f"{report.sandwich_residual:.3e})"
        )
    probability = float(np.trace(choi @ s.probability_op).real)
    if probability <= 1e-12:
        raise ValueError("zero average success probability")
    fidelity = float(np.trace(choi @ s.fidelity_op).real) / probability
    return fidelity, probability


def max_success_scale(sigma: np.ndarray, s: StructuralOperators) -> float:
    """Largest admissible probability weight ``q`` for the given state."""
    core = s.prob_inv_sqrt @ sigma @ s.prob_inv_sqrt
    dim = s.dim
    marg = partial_trace(core, (dim, dim), keep=[0])
    top = spectral_norm(marg)
    if top <= 0:
        raise ValueError("state has no overlap with the support of the probability operator")
    return 1.0 / top


def protocol_from_sigma(sigma: np.ndarray, q: float, s: StructuralOperators) -> np.ndarray:
    """Choi matrix ``q * C^{-1/2} sigma C^{-1/2}`` of the protocol family.

    ``sigma`` must be a state supported inside the support of the probability
    operator and ``0 < q`` must not exceed the trace-non-increasing bound; the
    resulting protocol then has fidelity ``Tr(sigma K)`` and probability ``q``.
    """
    sigma = hermitize(sigma, tol=1e-10)
    if abs(np.trace(sigma).real - 1.0) > 1e-9:
        raise ValueError(f"sigma must have unit trace, got {np.trace(sigma).real}")
    if np.linalg.eigvalsh(sigma)[0] < -1e-10:
        raise ValueError("sigma must be positive semidefinite")
    supp = s.prob_sqrt @ s.prob_inv_sqrt  # support projector of the probability operator
    leak = spectral_norm(sigma - supp @ sigma @ supp)
    if leak > 1e-9:
        raise ValueError(
            f"sigma leaks outside the support of the probability operator (residual {leak:.3e})"
        )
    bound = max_success_scale(sigma, s)
    if not 0.0 < q <= bound * (1.0 + 1e-9):
        raise ValueError(f"q = {q} outside the admissible interval (0, {bound}]")
    choi = q * (s.prob_inv_sqrt @ sigma @ s.prob_inv_sqrt)
    return (choi + choi.conj().T) / 2


def top_eigenstate_protocol(s: StructuralOperators) -> np.ndarray:
    """Optimal-fidelity protocol from the leading kernel eigenvector at maximal q."""
    v = s.top_basis[:, -1]
    sigma = np.outer(v, v.conj())
    return protocol_from_sigma(sigma, max_success_scale(sigma, s), s)
