"""Hamiltonians, clustered spectral decompositions and the energy-preserving
constraint on Choi matrices.

A channel is energy preserving for ``H`` exactly when its Choi matrix ``G``
satisfies ``G = Pi G Pi`` with ``Pi = sum_E P_E (x) P_E`` built from the
spectral projectors of ``H``.  The sandwich form is the authoritative test
here; the commutator residual is reported for diagnostics only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import pauli_string_operator
from .linalg import (
    as_operator,
    eigh,
    kron,
    partial_trace,
    spectral_norm,
)
from .rng import complex_gaussians, philox_generator

DEFAULT_CLUSTER_TOL = 1e-8
DEFAULT_EPO_TOL = 1e-9


@dataclass(frozen=True)
class EnergyStructure:
    """Clustered spectral decomposition of a Hamiltonian.

    Attributes
    ----------
    hamiltonian : ndarray
        The input Hamiltonian.
    eigenvalues : ndarray
        One representative energy per cluster, ascending.
    projectors : list of ndarray
        Spectral projector of each cluster; they resolve the identity.
    eigenbasis : ndarray
        Orthonormal eigenvectors as columns, cluster by cluster.
    cluster_labels : ndarray
        Cluster index of each eigenbasis column.
    choi_projector : ndarray
        ``Pi = sum_E P_E (x) P_E`` acting on the Choi space ``dim**2``.
    cluster_tol : float
        Relative tolerance used to merge nearby eigenvalues.
    """

    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    projectors: list[np.ndarray]
    eigenbasis: np.ndarray
    cluster_labels: np.ndarray
    choi_projector: np.ndarray
    cluster_tol: float

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def cluster_sizes(self) -> list[int]:
        return [int(np.count_nonzero(self.cluster_labels == c)) for c in range(len(self.eigenvalues))]

    @property
    def choi_projector_rank(self) -> int:
        return sum(s * s for s in self.cluster_sizes)

    def degeneracy_pattern(self) -> str:
        return "+".join(str(s) for s in self.cluster_sizes)


def spectral_decompose(h: np.ndarray, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> EnergyStructure:
    """Diagonalize ``H`` and merge eigenvalues within ``cluster_tol * max(1, ||H||)``.

    Clustering is greedy over the ascending eigenvalues: each eigenvalue joins
    the current cluster when it is within tolerance of its predecessor.
    """
    h = as_operator(h)
    w, v = eigh(h)
    if np.abs(v.imag).max() <= 1e-13:
        v = v.real.astype(np.complex128)  # keep the eigenbasis of a real H exactly real
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    gap = cluster_tol * scale
    labels = np.zeros(len(w), dtype=np.intp)
    for i in range(1, len(w)):
        labels[i] = labels[i - 1] + (0 if w[i] - w[i - 1] <= gap else 1)
    n_clusters = int(labels[-1]) + 1

    projectors = []
    energies = []
    for c in range(n_clusters):
        cols = v[:, labels == c]
        p = cols @ cols.conj().T
        if np.abs(p.imag).max() <= 1e-13:
            p = p.real.astype(np.complex128)  # spectral projectors of a real H are real
        projectors.append(p)
        energies.append(float(np.mean(w[labels == c])))

    pi = np.zeros((h.shape[0] ** 2, h.shape[0] ** 2), dtype=np.complex128)
    for p in projectors:
        pi += np.kron(p, p)

    return EnergyStructure(
        hamiltonian=h,
        eigenvalues=np.array(energies),
        projectors=projectors,
        eigenbasis=v,
        cluster_labels=labels,
        choi_projector=pi,
        cluster_tol=cluster_tol,
    )


def ising_all_to_all(n_sites: int, coupling: float, field_strength: float) -> np.ndarray:
    """All-to-all Ising Hamiltonian ``J sum_{i,j} Z_i Z_j + h sum_i X_i``.

    The double sum runs over all ordered pairs including ``i == j``, read
    literally: diagonal terms contribute ``J * N * I`` and each unordered pair
    enters twice.  The constant offset does not change the eigenprojectors.
    """
    if n_sites < 1:
        raise ValueError("need at least one site")
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=np.complex128)

    def site_op(label: str, i: int) -> np.ndarray:
        return kron([pauli_string_operator(label) if j == i else np.eye(2) for j in range(n_sites)])

    z_ops = [site_op("Z", i) for i in range(n_sites)]
    for i in range(n_sites):
        for j in range(n_sites):
            h += coupling * z_ops[i] @ z_ops[j]
    for i in range(n_sites):
        h += field_strength * site_op("X", i)
    return h


def hamiltonian_from_pauli_terms(terms: Sequence[tuple[float, str]]) -> np.ndarray:
    """Hamiltonian from ``(coefficient, pauli string)`` pairs, e.g. ``(-0.5, "ZZ")``."""
    if not terms:
        raise ValueError("need at least one Pauli term")
    length = len(terms[0][1])
    if any(len(s) != length for _, s in terms):
        raise ValueError("all Pauli strings must have equal length")
    h = np.zeros((2**length, 2**length), dtype=np.complex128)
    for coef, string in terms:
        h += complex(coef) * pauli_string_operator(string)
    if np.abs(h.imag).max() > 1e-12 * max(1.0, np.abs(h).max()):
        raise ValueError("Pauli terms produce a non-Hermitian or complex Hamiltonian")
    return h


@dataclass(frozen=True)
class EpoReport:
    """Residuals of the energy-preservation test for a Choi matrix."""

    accepted: bool
    sandwich_residual: float
    commutator_residual: float
    tol: float


def is_energy_preserving(
    choi: np.ndarray, es: EnergyStructure, tol: float = DEFAULT_EPO_TOL
) -> EpoReport:
    """Test ``G = Pi G Pi`` at relative tolerance ``tol``; report both residuals."""
    choi = as_operator(choi)
    pi = es.choi_projector
    if choi.shape != pi.shape:
        raise ValueError(f"choi of shape {choi.shape} does not match Hamiltonian dim {es.dim}")
    scale = max(1.0, spectral_norm(choi))
    sandwich = spectral_norm(choi - pi @ choi @ pi)
    commutator = spectral_norm(choi @ pi - pi @ choi)
    return EpoReport(
        accepted=bool(sandwich <= tol * scale),
        sandwich_residual=float(sandwich),
        commutator_residual=float(commutator),
        tol=tol,
    )


def random_epo_choi(es: EnergyStructure, seed: int, stream: int = 0) -> np.ndarray:
    """Random valid CPTN Choi matrix with ``G = Pi G Pi``.

    Samples a Wishart matrix, pinches it with ``Pi``, and rescales so the
    largest eigenvalue of ``Tr_out`` equals one.
    """
    dim = es.dim
    gen = philox_generator(seed, stream)
    g = complex_gaussians(gen, (dim * dim, dim * dim))
    g = g @ g.conj().T
    pi = es.choi_projector
    choi = pi @ g @ pi
    choi = (choi + choi.conj().T) / 2
    marg = partial_trace(choi, (dim, dim), keep=[0])
    top = float(np.linalg.eigvalsh((marg + marg.conj().T) / 2)[-1])
    if top <= 0:
        raise ValueError("constraint projector annihilated the sample; invalid EnergyStructure")
    return choi / top
