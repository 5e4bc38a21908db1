"""Semidefinite programming for the maximum success probability.

The production problem is tiny: maximize ``Tr(M)`` over an ``r x r`` PSD block
``M`` subject to one linear matrix inequality ``L(M) <= I``.  It is solved by
a self-contained primal-dual path-following interior-point method with
Nesterov-Todd scaling, kept transparent so that optimality certificates are
first-class outputs.  Complex Hermitian data is handled through an isometric
real coordinatization of the Hermitian space; the PSD cone itself is treated
natively with complex eigendecompositions.

Primal/dual pair solved by the core routine:

    max <D, M>  s.t.  M >= 0,  L(M) <= R
    min <R, Z>  s.t.  Z >= 0,  L*(Z) >= D

Both sides admit strictly feasible starts for our instances, so the iterates
stay exactly feasible and the duality gap equals ``<M, T> + <S, Z>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import partial_trace, spectral_norm
from .purification import StructuralOperators

_SQRT2 = np.sqrt(2.0)
NOGO_SCALAR_TOL = 1e-8


class SolverError(RuntimeError):
    """Interior-point iteration failed to reach the requested gap."""


# ---------------------------------------------------------------------------
# Hermitian <-> real coordinates
# ---------------------------------------------------------------------------


def hvec(m: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix."""
    n = m.shape[0]
    iu = np.triu_indices(n, 1)
    off = m[iu]
    return np.concatenate([m.diagonal().real, _SQRT2 * off.real, _SQRT2 * off.imag])


def hmat(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`hvec`."""
    iu = np.triu_indices(n, 1)
    k = iu[0].size
    m = np.zeros((n, n), dtype=np.complex128)
    m[np.diag_indices(n)] = v[:n]
    off = (v[n : n + k] + 1j * v[n + k :]) / _SQRT2
    m[iu] += off
    m[(iu[1], iu[0])] += off.conj()
    return m


def herm_dim(n: int) -> int:
    return n * n


def lin_op_matrix(op: Callable[[np.ndarray], np.ndarray], m: int, g: int) -> np.ndarray:
    """Real matrix of a Hermitian-to-Hermitian linear map in hvec coordinates."""
    cols = np.empty((herm_dim(g), herm_dim(m)))
    for j in range(herm_dim(m)):
        e = np.zeros(herm_dim(m))
        e[j] = 1.0
        cols[:, j] = hvec(op(hmat(e, m)))
    return cols


def _congruence_matrix(w: np.ndarray) -> np.ndarray:
    """hvec-coordinate matrix of ``X -> W X W`` for Hermitian ``W``."""
    n = w.shape[0]
    out = np.empty((herm_dim(n), herm_dim(n)))
    for j in range(herm_dim(n)):
        e = np.zeros(herm_dim(n))
        e[j] = 1.0
        out[:, j] = hvec(w @ hmat(e, n) @ w)
    return out


# ---------------------------------------------------------------------------
# Interior-point core
# ---------------------------------------------------------------------------


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Nesterov-Todd point W with ``W z W = x`` for positive definite x, z."""
    wx, vx = np.linalg.eigh(_sym(x))
    xh = (vx * np.sqrt(np.maximum(wx, 1e-300))) @ vx.conj().T
    inner = _sym(xh @ z @ xh)
    wi, vi = np.linalg.eigh(inner)
    inner_isqrt = (vi * (1.0 / np.sqrt(np.maximum(wi, 1e-300)))) @ vi.conj().T
    return _sym(xh @ inner_isqrt @ xh)


def _inv_psd(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_sym(x))
    return (v * (1.0 / np.maximum(w, 1e-300))) @ v.conj().T


def _max_step(x: np.ndarray, dx: np.ndarray, tau: float) -> float:
    """Largest step in [0, 1] keeping ``x + a*dx`` safely positive definite."""
    w, v = np.linalg.eigh(_sym(x))
    isqrt = (v * (1.0 / np.sqrt(np.maximum(w, 1e-300)))) @ v.conj().T
    lam = float(np.linalg.eigvalsh(_sym(isqrt @ dx @ isqrt))[0])
    if lam >= 0:
        return 1.0
    return min(1.0, -tau / lam)


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = (a + a.T) / 2
    jitter = 0.0
    for _ in range(6):
        try:
            c = np.linalg.cholesky(a + jitter * np.eye(a.shape[0]))
            y = np.linalg.solve(c, b)
            return np.linalg.solve(c.T, y)
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-14 * max(1.0, float(np.trace(a))))
    return np.linalg.lstsq(a, b, rcond=None)[0]


@dataclass
class ConeSolution:
    """Raw output of the interior-point core (both primal and dual blocks)."""

    m_block: np.ndarray
    z_block: np.ndarray
    primal: float
    dual: float
    gap: float
    iterations: int


def solve_trace_lmi(
    objective: np.ndarray,
    lmat: np.ndarray,
    dim_m: int,
    dim_g: int,
    rhs: np.ndarray,
    gap_tol: float = 1e-9,
    max_iter: int = 200,
) -> ConeSolution:
    """Maximize ``<objective, M>`` s.t. ``M >= 0`` and ``L(M) <= rhs``.

    ``lmat`` is the hvec-coordinate matrix of the constraint map ``L``.  The
    dual variable ``Z`` certifies the bound ``<rhs, Z>``; feasibility of both
    iterates is maintained exactly, so the reported gap is a true certificate.
    Raises :class:`SolverError` when the iteration cap is hit.
    """
    d_vec = hvec(objective)
    r_vec = hvec(rhs)

    def lop(x: np.ndarray) -> np.ndarray:
        return lmat @ x

    def lop_t(z: np.ndarray) -> np.ndarray:
        return lmat.T @ z

    # strictly feasible primal start: M = alpha I with L(alpha I) strictly below rhs
    li = hmat(lop(hvec(np.eye(dim_m, dtype=np.complex128))), dim_g)
    r_min = float(np.linalg.eigvalsh(_sym(rhs))[0])
    li_max = float(np.linalg.eigvalsh(_sym(li))[-1])
    if r_min <= 0:
        raise SolverError("right-hand side of the LMI must be positive definite")
    alpha = 0.5 * r_min / li_max if li_max > 0 else 1.0
    m_blk = alpha * np.eye(dim_m, dtype=np.complex128)

    # strictly feasible dual start: Z = beta I with L*(beta I) strictly above objective
    lti = hmat(lop_t(hvec(np.eye(dim_g, dtype=np.complex128))), dim_m)
    lti_min = float(np.linalg.eigvalsh(_sym(lti))[0])
    if lti_min <= 0:
        raise SolverError("L*(I) must be positive definite for a feasible dual start")
    d_max = float(np.linalg.eigvalsh(_sym(objective))[-1])
    beta = 2.0 * (max(d_max, 0.0) + 1.0) / lti_min
    z_blk = beta * np.eye(dim_g, dtype=np.complex128)

    s_blk = hmat(r_vec - lop(hvec(m_blk)), dim_g)
    t_blk = hmat(lop_t(hvec(z_blk)) - d_vec, dim_m)
    nu = dim_m + dim_g
    tau = 0.98

    for it in range(1, max_iter + 1):
        gap = float(np.trace(m_blk @ t_blk).real + np.trace(s_blk @ z_blk).real)
        pobj = float(np.trace(m_blk @ objective).real)
        dobj = float(np.trace(z_blk @ rhs).real)
        if gap <= gap_tol * max(1.0, abs(pobj), abs(dobj)):
            return ConeSolution(m_blk, z_blk, pobj, dobj, gap, it - 1)

        mu = gap / nu
        w1 = _nt_scaling(m_blk, t_blk)
        w2 = _nt_scaling(s_blk, z_blk)
        k1 = _congruence_matrix(w1)
        k2 = _congruence_matrix(w2)
        newton = lmat @ k1 @ lmat.T + k2
        t_inv = _inv_psd(t_blk)
        z_inv = _inv_psd(z_blk)

        def direction(sigma_mu: float):
            r1 = sigma_mu * t_inv - m_blk
            r2 = sigma_mu * z_inv - s_blk
            rhs_vec = hvec(r2) + lop(hvec(r1))
            dz = hmat(_solve_spd(newton, rhs_vec), dim_g)
            dt = hmat(lop_t(hvec(dz)), dim_m)
            dm = r1 - w1 @ dt @ w1
            ds = hmat(-lop(hvec(dm)), dim_g)
            return dm, ds, dz, dt

        # predictor
        dm, ds, dz, dt = direction(0.0)
        a_p = min(_max_step(m_blk, dm, tau), _max_step(s_blk, ds, tau))
        a_d = min(_max_step(t_blk, dt, tau), _max_step(z_blk, dz, tau))
        a = min(a_p, a_d)
        gap_aff = float(
            np.trace((m_blk + a * dm) @ (t_blk + a * dt)).real
            + np.trace((s_blk + a * ds) @ (z_blk + a * dz)).real
        )
        sigma = min(max((max(gap_aff, 0.0) / gap) ** 3, 1e-10), 0.99)

        # corrector (same scaling, refreshed target on the central path)
        dm, ds, dz, dt = direction(sigma * mu)
        a_p = min(_max_step(m_blk, dm, tau), _max_step(s_blk, ds, tau))
        a_d = min(_max_step(t_blk, dt, tau), _max_step(z_blk, dz, tau))

        m_blk = _sym(m_blk + a_p * dm)
        z_blk = _sym(z_blk + a_d * dz)
        s_blk = hmat(r_vec - lop(hvec(m_blk)), dim_g)
        t_blk = hmat(lop_t(hvec(z_blk)) - d_vec, dim_m)

    raise SolverError(f"no convergence within {max_iter} iterations (gap={gap:.3e})")


# ---------------------------------------------------------------------------
# Problem-level interfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SdpSolution:
    """Optimal protocol with its certificates.

    ``feasibility_residuals`` holds ``psd_min_eig`` (of the Choi matrix),
    ``trout_violation`` (positive part of the largest eigenvalue of
    ``Tr_out - I``) and ``subspace_residual`` (distance from the optimal
    fidelity subspace), all recomputed on the original constraint set.
    """

    choi_star: np.ndarray
    p_max: float
    dual_bound: float
    gap: float
    feasibility_residuals: dict[str, float] = field(default_factory=dict)
    iterations: int = 0


@dataclass(frozen=True)
class NoProtocol:
    """Typed outcome when no protocol can strictly beat the baseline."""

    max_fidelity: float
    baseline: float
    reason: str = "maximum fidelity does not exceed the do-nothing baseline"


def _tr_out_op(dim_in: int, dim_out: int) -> Callable[[np.ndarray], np.ndarray]:
    def op(x: np.ndarray) -> np.ndarray:
        return partial_trace(x, (dim_in, dim_out), keep=[0])

    return op


def _feasibility_residuals(choi: np.ndarray, s: StructuralOperators) -> dict[str, float]:
    dim = s.dim
    min_eig = float(np.linalg.eigvalsh(_sym(choi))[0])
    marg = partial_trace(choi, (dim, dim), keep=[0])
    trout = float(max(0.0, np.linalg.eigvalsh(_sym(marg))[-1] - 1.0))
    q = s.prob_inv_sqrt @ s.top_projector @ s.prob_sqrt
    subspace = float(spectral_norm(q @ choi @ q.conj().T - choi))
    return {
        "psd_min_eig": min_eig,
        "trout_violation": trout,
        "subspace_residual": subspace,
    }


def solve_max_success(s: StructuralOperators, max_iter: int = 200) -> SdpSolution | NoProtocol:
    """Maximum average success probability over the optimal-fidelity protocols.

    Uses the reduced parameterization ``choi = C^{-1/2} (B M B†) C^{-1/2}``
    with ``B`` spanning the top eigenspace of the ratio kernel: the subspace
    equality constraint then holds identically, the objective becomes
    ``Tr(M)``, and only the trace-non-increasing LMI remains.

    Returns :class:`NoProtocol` in the no-go regime (gamma < 1 with the
    maximum fidelity stuck at the baseline), where the optimal-fidelity set
    contains no genuine purification.
    """
    if s.gamma < 1.0 and s.max_fidelity <= s.baseline + NOGO_SCALAR_TOL:
        return NoProtocol(max_fidelity=s.max_fidelity, baseline=s.baseline)

    r = s.top_rank
    dim = s.dim
    y = s.prob_inv_sqrt @ s.top_basis  # dim**2 x r
    tr_out = _tr_out_op(dim, dim)

    def constraint(m: np.ndarray) -> np.ndarray:
        return tr_out(y @ m @ y.conj().T)

    lmat = lin_op_matrix(constraint, r, dim)
    cone = solve_trace_lmi(
        objective=np.eye(r, dtype=np.complex128),
        lmat=lmat,
        dim_m=r,
        dim_g=dim,
        rhs=np.eye(dim, dtype=np.complex128),
        gap_tol=s.tolerances.sdp_gap,
        max_iter=max_iter,
    )
    choi = _sym(y @ cone.m_block @ y.conj().T)
    return SdpSolution(
        choi_star=choi,
        p_max=cone.primal,
        dual_bound=cone.dual,
        gap=cone.gap,
        feasibility_residuals=_feasibility_residuals(choi, s),
        iterations=cone.iterations,
    )


@dataclass(frozen=True)
class CertificateReport:
    """Independent re-verification of an SDP solution against the original
    constraints (not the reduced form the solver used)."""

    psd_min_eig: float
    trout_violation: float
    subspace_residual: float
    gap: float
    p_max: float
    dual_bound: float
    residuals_ok: bool
    gap_ok: bool

    @property
    def ok(self) -> bool:
        return self.residuals_ok and self.gap_ok


def dual_certificate_check(
    sol: SdpSolution,
    s: StructuralOperators,
    residual_tol: float = 1e-8,
    gap_tol: float = 1e-6,
) -> CertificateReport:
    """Recompute all residuals of ``sol`` from scratch with dense primitives."""
    res = _feasibility_residuals(sol.choi_star, s)
    gap = sol.dual_bound - sol.p_max
    residuals_ok = (
        res["psd_min_eig"] >= -residual_tol
        and res["trout_violation"] <= residual_tol
        and res["subspace_residual"] <= residual_tol
    )
    gap_ok = -1e-9 <= gap <= gap_tol * max(1.0, sol.p_max)
    return CertificateReport(
        psd_min_eig=res["psd_min_eig"],
        trout_violation=res["trout_violation"],
        subspace_residual=res["subspace_residual"],
        gap=gap,
        p_max=sol.p_max,
        dual_bound=sol.dual_bound,
        residuals_ok=residuals_ok,
        gap_ok=gap_ok,
    )


# ---------------------------------------------------------------------------
# Brute-force routes (oracles for acceptance testing)
# ---------------------------------------------------------------------------


def solve_cptn_linear(
    objective: np.ndarray, dim_in: int, dim_out: int, gap_tol: float = 1e-10, max_iter: int = 200
) -> ConeSolution:
    """Maximize ``Tr(choi @ objective)`` over all CPTN Choi matrices."""
    d_choi = dim_in * dim_out
    tr_out = _tr_out_op(dim_in, dim_out)
    lmat = lin_op_matrix(tr_out, d_choi, dim_in)
    return solve_trace_lmi(
        objective=objective,
        lmat=lmat,
        dim_m=d_choi,
        dim_g=dim_in,
        rhs=np.eye(dim_in, dtype=np.complex128),
        gap_tol=gap_tol,
        max_iter=max_iter,
    )


def bruteforce_max_fidelity(
    fidelity_op: np.ndarray,
    probability_op: np.ndarray,
    dim_in: int,
    dim_out: int,
    tol: float = 1e-8,
    positive_tol: float = 1e-7,
) -> float:
    """Best fidelity-to-probability ratio over unconstrained CPTN maps, by bisection.

    For each candidate ratio ``t`` the linear SDP value
    ``max Tr[choi (A - t C)]`` is strictly positive iff some CPTN map beats
    ``t``; the zero map makes the value nonnegative always, so the bisection
    thresholds at ``positive_tol``.
    """
    lo, hi = 0.0, 1.0 + 1e-6
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        val = solve_cptn_linear(fidelity_op - mid * probability_op, dim_in, dim_out).primal
        if val > positive_tol:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
