"""Optimal universal quantum-state purification under energy-preserving
constraints for depolarizing noise: feasibility tests, optimal fidelity and
success probability, explicit protocol families, and physical dilations.
"""

__version__ = "0.1.0"

from .battery import BatteryProblem, build_battery_operators, solve_battery
from .channels import (
    apply_channel_via_choi,
    choi_from_action,
    choi_from_kraus,
    choi_of_identity,
    depolarizing_apply,
    depolarizing_choi,
    sym_mixed_state,
    sym_projector,
)
from .config import Tolerances
from .energy import (
    EnergyStructure,
    hamiltonian_from_pauli_terms,
    ising_all_to_all,
    is_energy_preserving,
    random_epo_choi,
    spectral_decompose,
)
from .montecarlo import McReport, monte_carlo_validate
from .purification import (
    NogoReport,
    PurificationProblem,
    StructuralOperators,
    baseline_fidelity,
    build_fidelity_operator,
    build_probability_operator,
    nogo_condition,
    protocol_from_sigma,
    protocol_metrics,
    structural_operators,
    top_eigenstate_protocol,
)
from .rng import HaarSampler, haar_random_state
from .sdp import (
    CertificateReport,
    NoProtocol,
    SdpSolution,
    SolverError,
    bruteforce_max_fidelity,
    dual_certificate_check,
    solve_cptn_linear,
    solve_max_success,
)
from .sweep import SweepConfig, default_config, run_sweep
from .synthesis import (
    DilationSpec,
    build_dilation,
    complement_choi,
    commuting_kraus_from_choi,
    dilation_for_protocol,
    kraus_from_choi,
    verify_dilation,
)

__all__ = [
    "BatteryProblem",
    "CertificateReport",
    "DilationSpec",
    "EnergyStructure",
    "HaarSampler",
    "McReport",
    "NoProtocol",
    "NogoReport",
    "PurificationProblem",
    "SdpSolution",
    "SolverError",
    "StructuralOperators",
    "SweepConfig",
    "Tolerances",
    "apply_channel_via_choi",
    "baseline_fidelity",
    "bruteforce_max_fidelity",
    "build_battery_operators",
    "build_dilation",
    "build_fidelity_operator",
    "build_probability_operator",
    "choi_from_action",
    "choi_from_kraus",
    "choi_of_identity",
    "commuting_kraus_from_choi",
    "complement_choi",
    "default_config",
    "depolarizing_apply",
    "depolarizing_choi",
    "dilation_for_protocol",
    "dual_certificate_check",
    "haar_random_state",
    "hamiltonian_from_pauli_terms",
    "ising_all_to_all",
    "is_energy_preserving",
    "kraus_from_choi",
    "monte_carlo_validate",
    "nogo_condition",
    "protocol_from_sigma",
    "protocol_metrics",
    "random_epo_choi",
    "run_sweep",
    "solve_battery",
    "solve_cptn_linear",
    "solve_max_success",
    "spectral_decompose",
    "structural_operators",
    "sym_mixed_state",
    "sym_projector",
    "top_eigenstate_protocol",
    "verify_dilation",
]
