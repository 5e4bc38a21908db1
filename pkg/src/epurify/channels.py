"""Quantum-information objects: depolarizing noise, symmetric-subspace states,
Choi matrices and channel application.

Choi convention (fixed throughout the package): for a map ``L`` acting on a
``D``-dimensional system,

    choi(L) = sum_ij |i><j| (x) L(|i><j|)

with ``{|i>}`` the computational basis, so the input factor comes first and
``L(rho) = Tr_in[(rho^T (x) I) choi]``.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .linalg import as_operator, kron, partial_trace, spectral_norm


def depolarizing_apply(x: np.ndarray, gamma: float, d: int) -> np.ndarray:
    """Apply the depolarizing map ``(1-gamma) Tr(X) I/d + gamma X``.

    Linear extension of the usual action on states to arbitrary operators.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    x = as_operator(x)
    if x.shape[0] != d:
        raise ValueError(f"operator of shape {x.shape} does not match dimension {d}")
    return (1.0 - gamma) * np.trace(x) * np.eye(d) / d + gamma * x


def depolarize_subsystems(
    m: np.ndarray, dims: Sequence[int], subsystems: Sequence[int], gamma: float
) -> np.ndarray:
    """Apply single-system depolarizing noise independently to each listed subsystem."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    dims = tuple(int(d) for d in dims)
    k = len(dims)
    out = as_operator(m)
    for i in subsystems:
        t = out.reshape(dims + dims)
        reduced = np.trace(t, axis1=i, axis2=k + i)
        d_i = dims[i]
        # rebuild with I/d_i in slot i: axes of tensordot output are
        # (i_row, i_col, rows-without-i ..., cols-without-i ...)
        filled = np.tensordot(np.eye(d_i) / d_i, reduced, axes=0)
        rest_rows = list(range(2, 2 + (k - 1)))
        rest_cols = list(range(2 + (k - 1), 2 + 2 * (k - 1)))
        new_rows = rest_rows[:i] + [0] + rest_rows[i:]
        new_cols = rest_cols[:i] + [1] + rest_cols[i:]
        total = out.shape[0]
        filled = np.transpose(filled, new_rows + new_cols).reshape(total, total)
        out = (1.0 - gamma) * filled + gamma * out
    return out


def permutation_operator(d: int, k: int, perm: Sequence[int]) -> np.ndarray:
    """Unitary permuting k tensor factors: ``W |i_1..i_k> = |i_{perm^-1(1)} ..>``.

    Factor ``j`` of the output holds factor ``perm[j]`` of the input.
    """
    D = d**k
    w = np.zeros((D, D), dtype=np.complex128)
    strides = [d ** (k - 1 - j) for j in range(k)]
    for idx in itertools.product(range(d), repeat=k):
        src = sum(idx[j] * strides[j] for j in range(k))
        dst = sum(idx[perm[j]] * strides[j] for j in range(k))
        w[dst, src] = 1.0
    return w


def sym_projector(d: int, k: int) -> np.ndarray:
    """Projector onto the symmetric subspace of k factors of dimension d.

    Built as the average of all k! permutation operators; trace equals
    ``binomial(d + k - 1, k)``.
    """
    if d < 2 or k < 1:
        raise ValueError("need d >= 2 and k >= 1")
    perms = list(itertools.permutations(range(k)))
    p = sum(permutation_operator(d, k, perm) for perm in perms) / len(perms)
    return p


def sym_mixed_state(d: int, k: int) -> np.ndarray:
    """Maximally mixed state on the symmetric subspace (the k-th Haar moment)."""
    p = sym_projector(d, k)
    return p / math.comb(d + k - 1, k)


def choi_of_identity(dim: int) -> np.ndarray:
    """Choi matrix of the identity channel: rank one with trace ``dim``."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    omega = np.eye(dim, dtype=np.complex128).reshape(-1)
    return np.outer(omega, omega.conj())


def apply_channel_via_choi(choi: np.ndarray, rho: np.ndarray, dim_in: int) -> np.ndarray:
    """Evaluate ``L(rho) = Tr_in[(rho^T (x) I) choi]``."""
    choi = as_operator(choi)
    rho = as_operator(rho)
    if rho.shape[0] != dim_in or choi.shape[0] % dim_in != 0:
        raise ValueError(
            f"input dim {dim_in} incompatible with rho {rho.shape} / choi {choi.shape}"
        )
    dim_out = choi.shape[0] // dim_in
    c = choi.reshape(dim_in, dim_out, dim_in, dim_out)
    return np.einsum("ij,ikjl->kl", rho, c)


def choi_from_action(action: Callable[[np.ndarray], np.ndarray], dim_in: int) -> np.ndarray:
    """Assemble a Choi matrix by running a map on the matrix-unit basis."""
    cols = []
    for i in range(dim_in):
        for j in range(dim_in):
            e = np.zeros((dim_in, dim_in), dtype=np.complex128)
            e[i, j] = 1.0
            cols.append(((i, j), np.asarray(action(e), dtype=np.complex128)))
    dim_out = cols[0][1].shape[0]
    choi = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=np.complex128)
    c = choi.reshape(dim_in, dim_out, dim_in, dim_out)
    for (i, j), block in cols:
        c[i, :, j, :] = block
    return choi


def depolarizing_choi(gamma: float, d: int) -> np.ndarray:
    return choi_from_action(lambda x: depolarizing_apply(x, gamma, d), d)


def choi_from_kraus(kraus: Sequence[np.ndarray], dim_in: int) -> np.ndarray:
    """Choi matrix of ``rho -> sum_k M_k rho M_k†``."""
    dim_out = np.asarray(kraus[0]).shape[0]
    choi = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=np.complex128)
    for m in kraus:
        m = np.asarray(m, dtype=np.complex128)
        v = m.T.reshape(-1)  # v[(i,k)] = M[k,i], matching the Choi convention
        choi += np.outer(v, v.conj())
    return choi


def cptn_violation(choi: np.ndarray, dim_in: int) -> float:
    """Largest eigenvalue of ``Tr_out(choi) - I`` (positive part = violation)."""
    choi = as_operator(choi)
    dim_out = choi.shape[0] // dim_in
    marg = partial_trace(choi, (dim_in, dim_out), keep=[0])
    w = np.linalg.eigvalsh((marg + marg.conj().T) / 2)
    return float(w[-1] - 1.0)


def cptp_deviation(choi: np.ndarray, dim_in: int) -> float:
    """Spectral distance of ``Tr_out(choi)`` from the identity."""
    choi = as_operator(choi)
    dim_out = choi.shape[0] // dim_in
    marg = partial_trace(choi, (dim_in, dim_out), keep=[0])
    return spectral_norm(marg - np.eye(dim_in))


def is_cptn(choi: np.ndarray, dim_in: int, tol: float = 1e-9, rank_tol: float = 1e-10) -> bool:
    w = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
    if w[0] < -rank_tol * max(float(w[-1]), 1.0):
        return False
    return cptn_violation(choi, dim_in) <= tol


PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli_string_operator(string: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"ZZ"`` or ``"XI"``."""
    if not string or any(ch not in PAULI for ch in string):
        raise ValueError(f"invalid Pauli string {string!r} (use characters I, X, Y, Z)")
    return kron([PAULI[ch] for ch in string])
