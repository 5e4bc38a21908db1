"""Physical realization of a protocol: Kraus operators commuting with the
Hamiltonian, the complementary (failure) branch completing the instrument,
and an energy-commuting unitary dilation with a projective measurement on the
environment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channels import apply_channel_via_choi, choi_from_kraus
from .energy import EnergyStructure, is_energy_preserving
from .linalg import as_operator, eigh, spectral_norm

KRAUS_ROUNDTRIP_TOL = 1e-9


def kraus_from_choi(choi: np.ndarray, rank_tol: float = 1e-10) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of a PSD Choi matrix.

    Eigenvalues at or below ``rank_tol * lambda_max`` are dropped; reassembling
    the Choi matrix from the returned list reproduces the input within
    roundoff.
    """
    choi = as_operator(choi)
    w, v = eigh(choi, tol=1e-10)
    lmax = max(float(w[-1]), 0.0)
    if w[0] < -max(rank_tol, 1e-9) * max(lmax, 1.0):
        raise ValueError(f"choi matrix is not PSD: min eigenvalue {w[0]:.3e}")
    dim = int(round(np.sqrt(choi.shape[0])))
    if dim * dim != choi.shape[0]:
        raise ValueError("only square (equal input/output dimension) channels supported")
    kraus = []
    for lam, vec in zip(w, v.T):
        if lam > rank_tol * lmax:
            kraus.append(np.sqrt(lam) * vec.reshape(dim, dim).T)
    return kraus


def block_project_kraus(kraus: list[np.ndarray], es: EnergyStructure) -> list[np.ndarray]:
    """Pinch each Kraus operator to block-diagonal form across energy clusters.

    Choi eigenvectors of a degenerate eigenvalue may mix energy blocks even
    when the channel is energy preserving; pinching restores a commuting Kraus
    set without changing the channel (verified by the caller).
    """
    out = []
    for m in kraus:
        acc = np.zeros_like(m)
        for p in es.projectors:
            acc += p @ m @ p
        out.append(acc)
    return out


def commuting_kraus_from_choi(
    choi: np.ndarray, es: EnergyStructure, rank_tol: float = 1e-10
) -> list[np.ndarray]:
    """Kraus set of an energy-preserving Choi matrix with ``[M_k, H] = 0``.

    Raises when the pinched set fails to reassemble the input Choi matrix,
    which signals a genuinely non-energy-preserving input.
    """
    report = is_energy_preserving(choi, es)
    if not report.accepted:
        raise ValueError(
            f"choi matrix is not energy preserving (residual {report.sandwich_residual:.3e})"
        )
    kraus = block_project_kraus(kraus_from_choi(choi, rank_tol), es)
    rebuilt = choi_from_kraus(kraus, es.dim)
    resid = spectral_norm(rebuilt - choi)
    if resid > KRAUS_ROUNDTRIP_TOL * max(1.0, spectral_norm(choi)):
        raise ValueError(
            f"pinched Kraus set fails to reproduce the choi matrix (residual {resid:.3e})"
        )
    return kraus


def complement_choi(choi_star: np.ndarray, es: EnergyStructure) -> np.ndarray:
    """Choi matrix of the failure branch completing the instrument.

    In an eigenbasis of ``H`` (rotated inside each cluster to diagonalize the
    input's trace-deficiency, which keeps it an eigenbasis) the branch measures
    the energy eigenstate and re-prepares the deficit state; the sum of both
    branches is then trace preserving and still energy preserving.
    """
    choi_star = as_operator(choi_star)
    report = is_energy_preserving(choi_star, es)
    if not report.accepted:
        raise ValueError(
            f"choi matrix is not energy preserving (residual {report.sandwich_residual:.3e})"
        )
    dim = es.dim
    basis = _adapted_eigenbasis(choi_star, es)
    out = np.zeros_like(choi_star)
    for col in basis.T:
        proj = np.outer(col, col.conj())
        img = apply_channel_via_choi(choi_star, proj, dim)
        t = float(np.trace(img).real)
        if t > 1e-12:
            rho = img / t - img
        else:
            rho = proj
        out += np.kron(proj, rho)
    return (out + out.conj().T) / 2


def _adapted_eigenbasis(choi: np.ndarray, es: EnergyStructure) -> np.ndarray:
    """Hamiltonian eigenbasis rotated per cluster to diagonalize ``Tr_out(choi)``.

    Needed so the per-eigenvector completion removes the full trace deficiency:
    within a degenerate cluster the deficiency matrix may have off-diagonal
    entries in an arbitrary eigenbasis.
    """
    dim = es.dim
    marg = choi.reshape(dim, dim, dim, dim)
    marg = np.einsum("ikjk->ij", marg)
    basis = es.eigenbasis.copy()
    for c in range(len(es.eigenvalues)):
        cols = np.flatnonzero(es.cluster_labels == c)
        if len(cols) == 1:
            continue
        sub = basis[:, cols]
        block = sub.conj().T @ marg @ sub
        _, rot = np.linalg.eigh((block + block.conj().T) / 2)
        basis[:, cols] = sub @ rot
    return basis


@dataclass(frozen=True)
class DilationSpec:
    """Energy-commuting Stinespring dilation of a protocol branch.

    The success branch acts as ``rho -> Tr_env[(I (x) q_env) U (rho (x)
    |ground><ground|) U†]`` where ``U`` commutes with ``H (x) I`` and the
    environment Hamiltonian is the identity, so its ground state is the first
    basis vector and any projector commutes with it.
    """

    kraus_success: list[np.ndarray]
    kraus_fail: list[np.ndarray]
    env_dim: int
    unitary: np.ndarray
    q_env: np.ndarray
    ground_index: int = 0

    def to_json_dict(self) -> dict:
        return {
            "env_dim": self.env_dim,
            "ground_index": self.ground_index,
            "kraus_success": [complex_matrix_to_json(m) for m in self.kraus_success],
            "kraus_fail": [complex_matrix_to_json(m) for m in self.kraus_fail],
            "unitary": complex_matrix_to_json(self.unitary),
            "q_env": complex_matrix_to_json(self.q_env),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @staticmethod
    def from_json_dict(data: dict) -> "DilationSpec":
        return DilationSpec(
            kraus_success=[complex_matrix_from_json(m) for m in data["kraus_success"]],
            kraus_fail=[complex_matrix_from_json(m) for m in data["kraus_fail"]],
            env_dim=int(data["env_dim"]),
            unitary=complex_matrix_from_json(data["unitary"]),
            q_env=complex_matrix_from_json(data["q_env"]),
            ground_index=int(data["ground_index"]),
        )


def complex_matrix_to_json(m: np.ndarray) -> list:
    """Nested lists with each entry as an ``[re, im]`` pair."""
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def complex_matrix_from_json(data: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=np.complex128)


def build_dilation(
    kraus_success: list[np.ndarray],
    kraus_fail: list[np.ndarray],
    es: EnergyStructure,
    tp_tol: float = 1e-9,
    commutator_tol: float = 1e-8,
) -> DilationSpec:
    """Construct the dilation unitary block-by-block over energy eigenspaces.

    The combined Kraus list must be trace preserving and every operator must
    commute with ``H``.  Within each eigenspace-times-environment block the
    prescribed images of the ground-state column are completed to an
    orthonormal basis by twice-through Gram-Schmidt over a fixed lexicographic
    fill order, making the construction deterministic.
    """
    kraus_all = [np.asarray(m, dtype=np.complex128) for m in kraus_success] + [
        np.asarray(m, dtype=np.complex128) for m in kraus_fail
    ]
    if not kraus_all:
        raise ValueError("need at least one Kraus operator")
    dim = es.dim
    env_dim = len(kraus_all)
    total = np.zeros((dim, dim), dtype=np.complex128)
    for m in kraus_all:
        total += m.conj().T @ m
    tp_resid = spectral_norm(total - np.eye(dim))
    if tp_resid > tp_tol:
        raise ValueError(
            f"combined Kraus list is not trace preserving (residual {tp_resid:.3e}); "
            "the prescribed dilation images would not be orthonormal"
        )
    h = es.hamiltonian
    h_scale = max(1.0, spectral_norm(h))
    for k, m in enumerate(kraus_all):
        resid = spectral_norm(m @ h - h @ m)
        if resid > commutator_tol * h_scale:
            raise ValueError(f"Kraus operator {k} does not commute with H (residual {resid:.3e})")

    unitary = np.zeros((dim * env_dim, dim * env_dim), dtype=np.complex128)
    for c in range(len(es.eigenvalues)):
        cols = np.flatnonzero(es.cluster_labels == c)
        vecs = es.eigenbasis[:, cols]  # orthonormal basis of the eigenspace
        block = _block_basis(vecs, env_dim)  # columns: |v_i> (x) |phi_k>, k-major in fill order
        images = np.zeros((dim * env_dim, len(cols)), dtype=np.complex128)
        for idx in range(len(cols)):
            v = vecs[:, idx]
            img = np.zeros(dim * env_dim, dtype=np.complex128)
            for k, m in enumerate(kraus_all):
                img += np.kron(m @ v, _env_basis_vec(env_dim, k))
            images[:, idx] = img
        gram = images.conj().T @ images
        if spectral_norm(gram - np.eye(len(cols))) > 1e-8:
            raise ValueError("prescribed dilation images are not orthonormal")
        # complete in block coordinates: any roundoff then stays inside the
        # eigenspace, keeping U exactly block preserving
        image_coords = block.conj().T @ images
        completed = block @ _complete_orthonormal(image_coords, np.eye(block.shape[1]))
        # source order: ground-state columns first, then the remaining fill order
        src = [np.kron(vecs[:, i], _env_basis_vec(env_dim, 0)) for i in range(len(cols))]
        for i in range(len(cols)):
            for k in range(1, env_dim):
                src.append(np.kron(vecs[:, i], _env_basis_vec(env_dim, k)))
        for target, source in zip(
            list(images.T) + list(completed.T), src
        ):
            unitary += np.outer(target, source.conj())

    q_env = np.zeros((env_dim, env_dim), dtype=np.complex128)
    for k in range(len(kraus_success)):
        q_env[k, k] = 1.0
    return DilationSpec(
        kraus_success=[np.asarray(m, dtype=np.complex128) for m in kraus_success],
        kraus_fail=[np.asarray(m, dtype=np.complex128) for m in kraus_fail],
        env_dim=env_dim,
        unitary=unitary,
        q_env=q_env,
        ground_index=0,
    )


def _env_basis_vec(env_dim: int, k: int) -> np.ndarray:
    e = np.zeros(env_dim, dtype=np.complex128)
    e[k] = 1.0
    return e


def _block_basis(vecs: np.ndarray, env_dim: int) -> np.ndarray:
    """Columns ``|v_i> (x) |phi_k>`` in lexicographic (i, k) order."""
    dim, count = vecs.shape
    out = np.zeros((dim * env_dim, count * env_dim), dtype=np.complex128)
    col = 0
    for i in range(count):
        for k in range(env_dim):
            out[:, col] = np.kron(vecs[:, i], _env_basis_vec(env_dim, k))
            col += 1
    return out


def _complete_orthonormal(images: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Extend orthonormal ``images`` to a basis of span(candidates) by Gram-Schmidt.

    Candidates are consumed in column order; each survivor is orthogonalized
    twice against everything accepted so far, then once more after
    normalization when its pre-normalization residual was small (the
    amplification can resurface projections onto earlier vectors).
    """
    target = candidates.shape[1] - images.shape[1]
    accepted = [images[:, i] for i in range(images.shape[1])]
    extras = []
    for j in range(candidates.shape[1]):
        if len(extras) == target:
            break
        v = candidates[:, j].copy()
        for _ in range(2):
            for u in accepted:
                v = v - u * np.vdot(u, v)
        norm = np.linalg.norm(v)
        if norm > 1e-7:
            v = v / norm
            if norm < 1e-3:
                for u in accepted:
                    v = v - u * np.vdot(u, v)
                v = v / np.linalg.norm(v)
            accepted.append(v)
            extras.append(v)
    if len(extras) != target:
        raise ValueError("Gram-Schmidt completion failed; prescribed images are degenerate")
    return np.column_stack(extras) if extras else np.zeros((candidates.shape[0], 0))


@dataclass(frozen=True)
class DilationReport:
    """Residuals of the end-to-end dilation verification."""

    reconstruction_residual: float
    unitarity_residual: float
    commutator_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return (
            self.reconstruction_residual <= self.tol
            and self.unitarity_residual <= self.tol
            and self.commutator_residual <= self.tol
        )


def verify_dilation(
    spec: DilationSpec, choi_star: np.ndarray, es: EnergyStructure, tol: float = 1e-8
) -> DilationReport:
    """Re-evaluate the dilation on a complete operator basis and compare Chois.

    Applies ``rho -> Tr_env[(I (x) q_env) U (rho (x) ground) U†]`` to every
    matrix unit, reassembles the Choi matrix of the success branch, and reports
    its distance to ``choi_star`` along with unitarity and energy-commutation
    residuals of ``U``.
    """
    dim = es.dim
    env_dim = spec.env_dim
    u = spec.unitary
    unit_resid = spectral_norm(u.conj().T @ u - np.eye(dim * env_dim))
    h_big = np.kron(es.hamiltonian, np.eye(env_dim))
    comm_resid = spectral_norm(u @ h_big - h_big @ u) / max(1.0, spectral_norm(es.hamiltonian))

    ground = _env_basis_vec(env_dim, spec.ground_index)
    succ = [k for k in range(env_dim) if abs(spec.q_env[k, k].real - 1.0) < 1e-12]
    # columns of U restricted to the ground-state environment input
    w = u @ np.kron(np.eye(dim), ground.reshape(-1, 1))  # (dim*env) x dim
    w = w.reshape(dim, env_dim, dim)  # [out_sys, out_env, in_sys]
    rebuilt = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    c = rebuilt.reshape(dim, dim, dim, dim)
    for a in range(dim):
        for b in range(dim):
            block = np.zeros((dim, dim), dtype=np.complex128)
            for k in succ:
                block += np.outer(w[:, k, a], w[:, k, b].conj())
            c[a, :, b, :] = block
    recon_resid = spectral_norm(rebuilt - choi_star) / max(1.0, spectral_norm(choi_star))
    return DilationReport(
        reconstruction_residual=float(recon_resid),
        unitarity_residual=float(unit_resid),
        commutator_residual=float(comm_resid),
        tol=tol,
    )


def dilation_for_protocol(
    choi_star: np.ndarray, es: EnergyStructure, rank_tol: float = 1e-10
) -> DilationSpec:
    """Full pipeline: failure branch, commuting Kraus sets, dilation unitary."""
    choi_fail = complement_choi(choi_star, es)
    kraus_success = commuting_kraus_from_choi(choi_star, es, rank_tol)
    if spectral_norm(choi_fail) <= 1e-12:
        kraus_fail: list[np.ndarray] = []
    else:
        kraus_fail = commuting_kraus_from_choi(choi_fail, es, rank_tol)
    return build_dilation(kraus_success, kraus_fail, es)
