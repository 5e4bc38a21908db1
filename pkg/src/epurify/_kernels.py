"""Hot numeric kernels for Haar Monte-Carlo estimation.

The per-sample loop (build the noisy n-copy input, contract it against two
precomputed reductions of the protocol's Choi matrix) dominates validation
runtime, so it carries a numba ``@njit`` implementation with a pure-numpy
vectorized fallback.  Selection: numpy is used when numba is unavailable or
when the environment variable ``EPURIFY_NO_NUMBA`` is set to a non-empty
value other than ``0``.  ``benchmarks/bench_kernels.py`` compares the two.

Kernel contract: given normalized state vectors ``psis`` (samples x d), noise
strength ``gamma``, copy count ``n``, an optional prefix operator ``prefix``
(the battery state; shape (1, 1) when absent), and the reductions

    rp[i, j]        = Tr_out(choi)[i, j]
    g4[i, a, j, b]  = choi traced over every output factor except the kept one

it returns per-sample fidelity numerators ``f[t]`` and success probabilities
``p[t]`` with ``X = prefix (x) N(psi)^(x n)``:

    p[t] = Re sum_ij rp[i, j] X[i, j]
    f[t] = Re sum_{iajb} g4[i, a, j, b] X[i, j] psi[b] conj(psi[a])
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None


def numba_requested() -> bool:
    flag = os.environ.get("EPURIFY_NO_NUMBA", "0")
    return numba is not None and flag in ("", "0")


def mc_samples_numpy(psis, gamma, n, prefix, g4, rp, chunk=2048):
    """Vectorized fallback: processes samples in chunks of batched einsums."""
    total = psis.shape[0]
    d = psis.shape[1]
    f = np.empty(total)
    p = np.empty(total)
    eye = np.eye(d, dtype=np.complex128)
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        batch = psis[lo:hi]
        noisy = gamma * np.einsum("ta,tb->tab", batch, batch.conj())
        noisy += (1.0 - gamma) / d * eye[None, :, :]
        x = np.broadcast_to(prefix, (hi - lo,) + prefix.shape)
        for _ in range(n):
            da, db = x.shape[1], d
            x = np.einsum("tij,tkl->tikjl", x, noisy).reshape(hi - lo, da * db, da * db)
        p[lo:hi] = np.einsum("ij,tij->t", rp, x).real
        f[lo:hi] = np.einsum("iajb,tij,tb,ta->t", g4, x, batch, batch.conj()).real
    return f, p


if numba is not None:

    @numba.njit(cache=True)
    def _kron2(a, b):
        ra, ca = a.shape
        rb, cb = b.shape
        out = np.empty((ra * rb, ca * cb), dtype=np.complex128)
        for i in range(ra):
            for j in range(ca):
                out[i * rb : (i + 1) * rb, j * cb : (j + 1) * cb] = a[i, j] * b
        return out

    @numba.njit(cache=True)
    def mc_samples_numba(psis, gamma, n, prefix, g4, rp):
        total, d = psis.shape
        f = np.empty(total)
        p = np.empty(total)
        mix = (1.0 - gamma) / d
        din = rp.shape[0]
        for t in range(total):
            psi = psis[t]
            noisy = np.empty((d, d), dtype=np.complex128)
            for a in range(d):
                for b in range(d):
                    noisy[a, b] = gamma * psi[a] * np.conj(psi[b])
                noisy[a, a] += mix
            x = prefix.copy()
            for _ in range(n):
                x = _kron2(x, noisy)
            acc_p = 0.0
            for i in range(din):
                for j in range(din):
                    acc_p += (rp[i, j] * x[i, j]).real
            p[t] = acc_p
            acc_f = 0.0 + 0.0j
            for i in range(din):
                for j in range(din):
                    xij = x[i, j]
                    if xij != 0.0:
                        for a in range(d):
                            for b in range(d):
                                acc_f += g4[i, a, j, b] * xij * psi[b] * np.conj(psi[a])
            f[t] = acc_f.real
        return f, p

else:  # pragma: no cover
    mc_samples_numba = None


def mc_samples(psis, gamma, n, prefix, g4, rp):
    """Dispatch to the jitted kernel or the numpy fallback (env-flag controlled)."""
    psis = np.ascontiguousarray(psis, dtype=np.complex128)
    prefix = np.ascontiguousarray(prefix, dtype=np.complex128)
    g4 = np.ascontiguousarray(g4, dtype=np.complex128)
    rp = np.ascontiguousarray(rp, dtype=np.complex128)
    if numba_requested():
        return mc_samples_numba(psis, float(gamma), int(n), prefix, g4, rp)
    return mc_samples_numpy(psis, float(gamma), int(n), prefix, g4, rp)
