"""Haar Monte-Carlo validation of protocol metrics.

Draws Haar-random pure states, pushes their noisy n-copy versions through a
protocol's Choi matrix, and estimates the average success probability and
purification fidelity with standard errors.  This is the independent oracle
that pins down the subsystem-ordering conventions of the structural operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import mc_samples
from .linalg import as_operator, partial_trace
from .rng import HaarSampler


@dataclass(frozen=True)
class McReport:
    """Estimates with standard errors; NaN throughout when ``samples == 0``.

    ``numerator_mean`` estimates the Haar integral of the unnormalized overlap
    ``Tr[psi * output]`` and ``probability_mean`` the integral of the total
    output trace; ``fidelity`` is their ratio with a delta-method error bar.
    """

    fidelity: float
    fidelity_se: float
    probability_mean: float
    probability_se: float
    numerator_mean: float
    numerator_se: float
    samples: int
    seed: int
    stream: int


def choi_reductions(
    choi: np.ndarray, in_dims, out_dims, kept_out_slot: int
) -> tuple[np.ndarray, np.ndarray]:
    """Precompute the two contractions the sampling kernel consumes.

    ``rp`` is the Choi matrix traced over all outputs; ``g4`` keeps the
    purified output slot and is reshaped to ``(Din, d_kept, Din, d_kept)``.
    """
    choi = as_operator(choi)
    in_dims = tuple(int(x) for x in in_dims)
    out_dims = tuple(int(x) for x in out_dims)
    dims = in_dims + out_dims
    n_in = len(in_dims)
    din = int(np.prod(in_dims))
    d_kept = out_dims[kept_out_slot]
    rp = partial_trace(choi, dims, keep=range(n_in))
    g4 = partial_trace(choi, dims, keep=list(range(n_in)) + [n_in + kept_out_slot])
    return g4.reshape(din, d_kept, din, d_kept), rp


def monte_carlo_validate(
    choi: np.ndarray,
    *,
    d: int,
    n: int,
    gamma: float,
    in_dims=None,
    out_dims=None,
    kept_out_slot: int = 0,
    prefix_state: np.ndarray | None = None,
    samples: int = 100_000,
    seed: int = 0,
    stream: int = 0,
) -> McReport:
    """Estimate (fidelity, success probability) of a protocol by Haar sampling.

    ``prefix_state`` prepends a fixed ancilla (the battery) to every noisy
    input; ``in_dims``/``out_dims`` default to ``n`` copies of dimension ``d``
    plus the prefix dimension when present.
    """
    if prefix_state is None:
        prefix = np.eye(1, dtype=np.complex128)
    else:
        prefix = np.ascontiguousarray(prefix_state, dtype=np.complex128)
    if in_dims is None:
        in_dims = ((prefix.shape[0],) if prefix.shape[0] > 1 else ()) + (d,) * n
    if out_dims is None:
        out_dims = tuple(in_dims)
    if samples <= 0:
        nan = float("nan")
        return McReport(nan, nan, nan, nan, nan, nan, 0, seed, stream)

    g4, rp = choi_reductions(choi, in_dims, out_dims, kept_out_slot)
    psis = HaarSampler(d, seed, stream).state_vectors(samples)
    f, p = mc_samples(psis, gamma, n, prefix, g4, rp)

    f_mean = float(np.mean(f))
    p_mean = float(np.mean(p))
    f_se = float(np.std(f, ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    p_se = float(np.std(p, ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    if p_mean > 0 and samples > 1:
        ratio = f_mean / p_mean
        # delta method for the ratio of correlated means
        cov = float(np.cov(f, p, ddof=1)[0, 1]) / samples
        var = (f_se**2 - 2 * ratio * cov + ratio**2 * p_se**2) / p_mean**2
        ratio_se = math.sqrt(max(var, 0.0))
    else:
        ratio = float("nan")
        ratio_se = float("nan")
    return McReport(
        fidelity=ratio,
        fidelity_se=ratio_se,
        probability_mean=p_mean,
        probability_se=p_se,
        numerator_mean=f_mean,
        numerator_se=f_se,
        samples=samples,
        seed=seed,
        stream=stream,
    )
