"""Purification assisted by an external battery.

A battery in a full-rank state is tensored in front of the n noisy copies and
the joint operation must preserve the energy of the composite Hamiltonian; the
battery is discarded at the end.  The structural-operator machinery carries
over verbatim on the enlarged space, with the battery occupying the leading
subsystem slot on both the input and output sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import depolarize_subsystems, sym_mixed_state
from .config import Tolerances
from .energy import EnergyStructure
from .linalg import hermitize, kron, partial_transpose, permute_subsystems
from .purification import (
    PurificationProblem,
    StructuralOperators,
    assemble_structural_operators,
    baseline_fidelity,
)
from .sdp import NoProtocol, SdpSolution, solve_max_success

MIN_BATTERY_EIGENVALUE = 1e-10


@dataclass(frozen=True)
class BatteryProblem:
    """Battery-assisted instance: base problem data plus the battery state and
    the energy structure of the composite Hamiltonian.

    The support identity behind the whole construction needs a genuinely
    full-rank battery state, so rank deficiency is rejected rather than
    regularized.
    """

    base: PurificationProblem
    phi: np.ndarray
    h_tilde: EnergyStructure

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.complex128)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError("battery state must be a square matrix")
        w = np.linalg.eigvalsh((phi + phi.conj().T) / 2)
        if w[0] < MIN_BATTERY_EIGENVALUE:
            raise ValueError(
                f"battery state must be full rank (min eigenvalue {w[0]:.3e} < "
                f"{MIN_BATTERY_EIGENVALUE})"
            )
        if abs(np.trace(phi).real - 1.0) > 1e-9:
            raise ValueError("battery state must have unit trace")
        if self.h_tilde.dim != phi.shape[0] * self.base.d**self.base.n:
            raise ValueError(
                f"composite Hamiltonian dimension {self.h_tilde.dim} does not match "
                f"battery_dim * d**n = {phi.shape[0] * self.base.d ** self.base.n}"
            )

    @property
    def battery_dim(self) -> int:
        return self.phi.shape[0]

    @property
    def in_dims(self) -> tuple[int, ...]:
        return (self.battery_dim,) + (self.base.d,) * self.base.n

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.in_dims


def build_battery_fidelity_operator(bp: BatteryProblem) -> np.ndarray:
    """Enlarged fidelity operator with the battery in the leading slots.

    Factor order is ``[battery_in, copies_in, battery_out, kept_out,
    remaining_out]``: the transposed battery state leads, the identity on the
    battery output sits between the transposed noise block and the purified
    slot, exactly as the Haar-averaged functional dictates.
    """
    base = bp.base
    d, n, gamma = base.d, base.n, base.gamma
    dr = bp.battery_dim
    dims = (d,) * (n + 1)
    x = sym_mixed_state(d, n + 1)
    x = depolarize_subsystems(x, dims, range(n), gamma)
    x = partial_transpose(x, dims, range(n))
    # [battery_in, copies_in(1..n), kept_out, battery_out, out_2..n]
    factors = [bp.phi.T, x, np.eye(dr)]
    if n > 1:
        factors.append(np.eye(d ** (n - 1)))
    a = kron(factors)
    dims_built = (dr,) + dims + (dr,) + (d,) * (n - 1)
    # swap kept_out (position n+1) with battery_out (position n+2)
    perm = list(range(len(dims_built)))
    perm[n + 1], perm[n + 2] = perm[n + 2], perm[n + 1]
    a = permute_subsystems(a, dims_built, perm)
    return hermitize(a, tol=1e-10)


def build_battery_probability_operator(bp: BatteryProblem) -> np.ndarray:
    """Enlarged probability operator, pinched by the composite constraint."""
    base = bp.base
    d, n, gamma = base.d, base.n, base.gamma
    dims = (d,) * n
    y = sym_mixed_state(d, n)
    y = depolarize_subsystems(y, dims, range(n), gamma)
    joint = kron([bp.phi, y])
    c0 = kron([joint.T, np.eye(bp.battery_dim * d**n)])
    pi = bp.h_tilde.choi_projector
    return hermitize(pi @ c0 @ pi, tol=1e-10)


def build_battery_operators(
    bp: BatteryProblem, tolerances: Tolerances = Tolerances()
) -> StructuralOperators:
    """Structural operators of the battery-assisted problem."""
    a = build_battery_fidelity_operator(bp)
    c = build_battery_probability_operator(bp)
    return assemble_structural_operators(
        a,
        c,
        energy=bp.h_tilde,
        gamma=bp.base.gamma,
        baseline=baseline_fidelity(bp.base.gamma, bp.base.d),
        in_dims=bp.in_dims,
        out_dims=bp.out_dims,
        kept_out_slot=1,
        tolerances=tolerances,
    )


def solve_battery(
    bp: BatteryProblem, tolerances: Tolerances = Tolerances()
) -> SdpSolution | NoProtocol:
    """Maximum success probability of the battery-assisted optimal protocols."""
    return solve_max_success(build_battery_operators(bp, tolerances))
