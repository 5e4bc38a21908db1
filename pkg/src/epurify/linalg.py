"""Dense complex-matrix kernel: tensor products, subsystem bookkeeping,
Hermitian eigendecomposition, matrix functions and norms.

Operators are plain ``complex128`` ndarrays.  Multipartite operators carry an
explicit list of local dimensions ``dims``; the matrix is the row-major
flattening of the tensor with row indices ``(i_1, ..., i_k)`` and column
indices ``(j_1, ..., j_k)``, i.e. ``np.kron`` order.  For Choi matrices the
canonical subsystem order is ``[in_1 ... in_n, out_1 ... out_n]``.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

DEFAULT_RANK_TOL = 1e-10
HERMITICITY_TOL = 1e-12


def as_operator(m) -> np.ndarray:
    """Coerce to a square complex128 matrix."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_dims(m: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"local dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(f"matrix of shape {m.shape} does not match dims {dims}")
    return dims


def kron(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of the factors in list order."""
    if len(factors) == 0:
        raise ValueError("kron requires at least one factor")
    out = np.asarray(factors[0], dtype=np.complex128)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=np.complex128))
    return out


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out all subsystems not listed in ``keep``.

    The kept subsystems appear in the output in their original relative order.
    """
    m = as_operator(m)
    dims = check_dims(m, dims)
    k = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= k for i in keep):
        raise IndexError(f"keep indices {keep} out of range for {k} subsystems")
    t = m.reshape(dims + dims)
    # einsum with repeated labels on the traced axes
    row = list(range(k))
    col = [k + i if i in keep else i for i in range(k)]
    out_labels = [i for i in keep] + [k + i for i in keep]
    t = np.einsum(t, row + col, out_labels)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def partial_transpose(m: np.ndarray, dims: Sequence[int], subset: Sequence[int]) -> np.ndarray:
    """Transpose the subsystems listed in ``subset`` (computational basis)."""
    m = as_operator(m)
    dims = check_dims(m, dims)
    k = len(dims)
    subset = set(int(i) for i in subset)
    if any(i < 0 or i >= k for i in subset):
        raise IndexError(f"subset {sorted(subset)} out of range for {k} subsystems")
    t = m.reshape(dims + dims)
    axes = list(range(2 * k))
    for i in subset:
        axes[i], axes[k + i] = axes[k + i], axes[i]
    total = int(np.prod(dims))
    return np.ascontiguousarray(np.transpose(t, axes)).reshape(total, total)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder subsystems so that new slot ``j`` holds old subsystem ``perm[j]``.

    Equivalent to conjugation by the corresponding permutation unitary; the
    spectrum is preserved.  Returns the matrix together with the permuted
    dimension list implied by ``perm``.
    """
    m = as_operator(m)
    dims = check_dims(m, dims)
    k = len(dims)
    perm = [int(i) for i in perm]
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of 0..{k - 1}")
    t = m.reshape(dims + dims)
    axes = perm + [k + i for i in perm]
    total = int(np.prod(dims))
    return np.ascontiguousarray(np.transpose(t, axes)).reshape(total, total)


def hermitize(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Symmetrize ``(M + M†)/2`` after checking the residual is roundoff-sized.

    A residual above ``tol * max(1, ||M||_inf)`` is treated as a genuine bug in
    the caller, not noise, and raises.
    """
    m = as_operator(m)
    scale = max(1.0, spectral_norm(m))
    resid = spectral_norm(m - m.conj().T)
    if resid > tol * scale:
        raise ValueError(f"matrix is not Hermitian: residual {resid:.3e} exceeds {tol:.1e} * {scale:.3e}")
    return (m + m.conj().T) / 2


def eigh(m: np.ndarray, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Returns ``(w, V)`` with ``M = V diag(w) V†`` and unitary ``V``.
    """
    return np.linalg.eigh(hermitize(m, tol))


def psd_sqrt(m: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix (eigenvalue clipping at 0)."""
    w, v = eigh(m)
    _check_psd(w, rank_tol)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def psd_sqrt_pinv(m: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Inverse square root of a PSD matrix on its support.

    Eigenvalues at or below ``rank_tol * lambda_max`` are treated as kernel and
    mapped to zero, so ``out @ m @ out`` equals the support projector of ``m``.
    """
    w, v = eigh(m)
    _check_psd(w, rank_tol)
    lmax = max(w[-1], 0.0)
    cut = rank_tol * lmax
    inv = np.where(w > cut, 1.0 / np.sqrt(np.maximum(w, cut if cut > 0 else 1.0)), 0.0)
    return (v * inv) @ v.conj().T


def support_projector(m: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the support (range) of a PSD matrix."""
    w, v = eigh(m)
    _check_psd(w, rank_tol)
    keep = w > rank_tol * max(w[-1], 0.0)
    vk = v[:, keep]
    return vk @ vk.conj().T


def support_rank(m: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    w, _ = eigh(m)
    return int(np.count_nonzero(w > rank_tol * max(w[-1], 0.0)))


def _check_psd(w: np.ndarray, rank_tol: float) -> None:
    lmax = max(float(w[-1]), 0.0)
    if w[0] < -rank_tol * max(lmax, 1.0):
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value (operator infinity-norm)."""
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))
