"""Numerical tolerances shared across the pipeline, surfaced in one place."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Tolerances:
    """Global numerical knobs.

    rank_tol : relative eigenvalue cut for pseudo-inverses and support projectors.
    cluster_tol : relative gap below which Hamiltonian eigenvalues merge into one cluster.
    max_eig_tol : relative width of the top-eigenspace membership window.
    sdp_gap : relative duality-gap target of the interior-point solver.
    epo_tol : relative tolerance of the energy-preservation sandwich test.
    """

    rank_tol: float = 1e-10
    cluster_tol: float = 1e-8
    max_eig_tol: float = 1e-9
    sdp_gap: float = 1e-9
    epo_tol: float = 1e-9

    def as_dict(self) -> dict:
        return asdict(self)
