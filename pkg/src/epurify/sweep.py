"""Parameter sweeps with reproducible CSV/JSON output.

Each (gamma, n) grid point builds the structural operators, runs the no-go
test and the success-probability SDP, optionally validates by Monte-Carlo,
synthesizes a dilation, and solves the battery-assisted variant.  Rows are
written in grid order regardless of execution order, so results are
byte-stable for a fixed config and seed (timing columns aside).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .battery import BatteryProblem, build_battery_operators
from .config import Tolerances
from .energy import (
    hamiltonian_from_pauli_terms,
    ising_all_to_all,
    is_energy_preserving,
    spectral_decompose,
)
from .montecarlo import monte_carlo_validate
from .purification import PurificationProblem, nogo_condition, structural_operators
from .sdp import NoProtocol, dual_certificate_check, solve_max_success
from .synthesis import complex_matrix_from_json, complex_matrix_to_json, dilation_for_protocol, verify_dilation

CSV_SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "gamma",
    "n",
    "max_fidelity",
    "baseline",
    "p_max",
    "purification_exists",
    "nogo",
    "nogo_operator_residual",
    "rank_top",
    "support_rank",
    "cluster_count",
    "degeneracy",
    "sdp_gap",
    "sdp_iterations",
    "psd_min_eig",
    "trout_violation",
    "subspace_residual",
    "epo_sandwich_residual",
    "mc_fidelity",
    "mc_fidelity_se",
    "mc_probability",
    "mc_probability_se",
    "dilation_reconstruction",
    "dilation_unitarity",
    "dilation_commutator",
    "battery_max_fidelity",
    "battery_p_max",
    "battery_gap",
    "error",
    "wall_time_ms",
]

TIMING_COLUMNS = ("wall_time_ms",)

CONVENTIONS = {
    "choi": "sum_ij |i><j| (x) L(|i><j|), input factors first",
    "tensor_order": "[in_1..in_n, out_1..out_n]; battery leads both sides when present",
    "kept_output": "first system output subsystem",
    "ising_double_sum": "all ordered pairs (i, j) including i == j",
    "ising_sites": "number of sites equals the copy count n",
    "rng": "Philox keyed by (seed, stream), Box-Muller Gaussians",
}


class ConfigError(ValueError):
    """Invalid sweep or problem configuration."""


@dataclass(frozen=True)
class SweepConfig:
    """Declarative description of a sweep run."""

    gamma_grid: tuple[float, ...]
    n_values: tuple[int, ...]
    hamiltonian: dict
    d: int = 2
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    samples: int = 0
    dilate: bool = False
    battery: dict | None = None
    emit_protocols: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not self.gamma_grid:
            raise ConfigError("gamma_grid must be non-empty")
        if any(not 0.0 < g <= 1.0 for g in self.gamma_grid):
            raise ConfigError(f"gamma_grid must lie in (0, 1], got {self.gamma_grid}")
        if not self.n_values or any(n not in (1, 2, 3, 4) for n in self.n_values):
            raise ConfigError(f"n_values must be a non-empty subset of {{1, 2, 3, 4}}, got {self.n_values}")
        if self.d < 2:
            raise ConfigError("d must be at least 2")

    @staticmethod
    def from_dict(data: dict) -> "SweepConfig":
        known = {
            "gamma_grid",
            "n_values",
            "hamiltonian",
            "d",
            "tolerances",
            "seed",
            "samples",
            "dilate",
            "battery",
            "emit_protocols",
            "jobs",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "hamiltonian" not in data:
            raise ConfigError("config requires a 'hamiltonian' table")
        tol = data.get("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("'tolerances' must be a table of named values")
        try:
            tolerances = Tolerances(**tol)
        except TypeError as exc:
            raise ConfigError(f"bad tolerances: {exc}") from None
        try:
            return SweepConfig(
                gamma_grid=tuple(float(g) for g in data.get("gamma_grid", ())),
                n_values=tuple(int(n) for n in data.get("n_values", ())),
                hamiltonian=dict(data["hamiltonian"]),
                d=int(data.get("d", 2)),
                tolerances=tolerances,
                seed=int(data.get("seed", 0)),
                samples=int(data.get("samples", 0)),
                dilate=bool(data.get("dilate", False)),
                battery=dict(data["battery"]) if data.get("battery") else None,
                emit_protocols=bool(data.get("emit_protocols", False)),
                jobs=int(data.get("jobs", 1)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def as_dict(self) -> dict:
        return {
            "gamma_grid": list(self.gamma_grid),
            "n_values": list(self.n_values),
            "hamiltonian": self.hamiltonian,
            "d": self.d,
            "tolerances": self.tolerances.as_dict(),
            "seed": self.seed,
            "samples": self.samples,
            "dilate": self.dilate,
            "battery": self.battery,
            "emit_protocols": self.emit_protocols,
            "jobs": self.jobs,
        }


def default_config(**overrides) -> SweepConfig:
    """The stock experiment: all-to-all Ising, 20 noise points, 2->1 and 3->1."""
    base = {
        "gamma_grid": tuple(np.linspace(0.05, 1.0, 20)),
        "n_values": (2, 3),
        "hamiltonian": {"type": "ising", "coupling": -0.5, "field": -0.3},
        "d": 2,
    }
    base.update(overrides)
    return SweepConfig.from_dict(base)


def build_hamiltonian(spec: dict, d: int, n: int) -> np.ndarray:
    """Materialize a Hamiltonian table for an n-copy system of local dim d."""
    kind = spec.get("type")
    if kind == "ising":
        if d != 2:
            raise ConfigError("the Ising model needs qubit subsystems (d = 2)")
        coupling = float(spec.get("coupling", spec.get("J", -0.5)))
        field_strength = float(spec.get("field", spec.get("h", -0.3)))
        return ising_all_to_all(n, coupling, field_strength)
    if kind == "dense":
        h = complex_matrix_from_json_or_real(spec["matrix"])
        if h.shape != (d**n, d**n):
            raise ConfigError(
                f"dense Hamiltonian of shape {h.shape} does not match d**n = {d ** n}"
            )
        return h
    if kind == "pauli":
        if d != 2:
            raise ConfigError("Pauli-string Hamiltonians need qubit subsystems (d = 2)")
        terms = [(float(c), str(s)) for c, s in spec["terms"]]
        if any(len(s) != n for _, s in terms):
            raise ConfigError(f"Pauli strings must have length n = {n}")
        return hamiltonian_from_pauli_terms(terms)
    raise ConfigError(f"unknown hamiltonian type {kind!r} (expected ising, dense or pauli)")


def complex_matrix_from_json_or_real(data) -> np.ndarray:
    """Accept nested lists of reals or of [re, im] pairs."""
    arr = np.asarray(data, dtype=object)
    if arr.ndim == 3:
        return complex_matrix_from_json(data)
    return np.asarray(data, dtype=np.complex128)


def build_battery_problem(spec: dict, base: PurificationProblem, cluster_tol: float) -> BatteryProblem:
    dim = int(spec.get("dim", 0))
    state_spec = spec.get("state", "maximally_mixed")
    if isinstance(state_spec, str):
        if state_spec != "maximally_mixed":
            raise ConfigError(f"unknown battery state {state_spec!r}")
        if dim < 1:
            raise ConfigError("battery 'dim' is required for a maximally mixed state")
        phi = np.eye(dim, dtype=np.complex128) / dim
    else:
        phi = complex_matrix_from_json_or_real(state_spec)
        dim = phi.shape[0]
    h_spec = spec.get("hamiltonian")
    if h_spec is None:
        raise ConfigError("battery config requires a composite 'hamiltonian'")
    if h_spec.get("type") == "pauli":
        qubits = int(np.log2(dim * base.d**base.n))
        if 2**qubits != dim * base.d**base.n:
            raise ConfigError("Pauli battery Hamiltonian needs a power-of-two composite dimension")
        h = build_hamiltonian(h_spec, 2, qubits)
    else:
        h = complex_matrix_from_json_or_real(h_spec["matrix"])
    if h.shape != (dim * base.d**base.n,) * 2:
        raise ConfigError("composite Hamiltonian does not match battery_dim * d**n")
    return BatteryProblem(base=base, phi=phi, h_tilde=spectral_decompose(h, cluster_tol))


@dataclass
class SweepRecord:
    """One grid point's results; `values` maps CSV columns to entries."""

    gamma: float
    n: int
    values: dict
    choi_star: np.ndarray | None = None


def run_point(config: SweepConfig, gamma: float, n: int, stream: int) -> SweepRecord:
    """Evaluate a single grid point; failures are captured in the record."""
    t0 = time.perf_counter()
    values: dict = {"gamma": gamma, "n": n}
    choi_star = None
    try:
        h = build_hamiltonian(config.hamiltonian, config.d, n)
        es = spectral_decompose(h, config.tolerances.cluster_tol)
        problem = PurificationProblem(d=config.d, n=n, gamma=gamma, energy=es)
        s = structural_operators(problem, config.tolerances)
        report = nogo_condition(s)
        values.update(
            max_fidelity=s.max_fidelity,
            baseline=s.baseline,
            nogo=report.nogo,
            purification_exists=not report.nogo,
            nogo_operator_residual=report.operator_residual,
            rank_top=s.top_rank,
            support_rank=s.support_rank,
            cluster_count=len(es.eigenvalues),
            degeneracy=es.degeneracy_pattern(),
        )
        sol = solve_max_success(s)
        if isinstance(sol, NoProtocol):
            values["error"] = ""
        else:
            choi_star = sol.choi_star
            cert = dual_certificate_check(sol, s)
            values.update(
                p_max=sol.p_max,
                sdp_gap=sol.gap,
                sdp_iterations=sol.iterations,
                psd_min_eig=cert.psd_min_eig,
                trout_violation=cert.trout_violation,
                subspace_residual=cert.subspace_residual,
            )
            if not cert.ok:
                values["error"] = "sdp certificate failure"
            epo = is_energy_preserving(sol.choi_star, es, config.tolerances.epo_tol)
            values["epo_sandwich_residual"] = epo.sandwich_residual
            if config.samples > 0:
                mc = monte_carlo_validate(
                    sol.choi_star,
                    d=config.d,
                    n=n,
                    gamma=gamma,
                    samples=config.samples,
                    seed=config.seed,
                    stream=stream,
                )
                values.update(
                    mc_fidelity=mc.fidelity,
                    mc_fidelity_se=mc.fidelity_se,
                    mc_probability=mc.probability_mean,
                    mc_probability_se=mc.probability_se,
                )
            if config.dilate:
                spec = dilation_for_protocol(sol.choi_star, es, config.tolerances.rank_tol)
                dil = verify_dilation(spec, sol.choi_star, es)
                values.update(
                    dilation_reconstruction=dil.reconstruction_residual,
                    dilation_unitarity=dil.unitarity_residual,
                    dilation_commutator=dil.commutator_residual,
                )
                if not dil.ok:
                    values["error"] = "dilation verification failure"
        if config.battery is not None:
            bp = build_battery_problem(config.battery, problem, config.tolerances.cluster_tol)
            bs = build_battery_operators(bp, config.tolerances)
            values["battery_max_fidelity"] = bs.max_fidelity
            bsol = solve_max_success(bs)
            if not isinstance(bsol, NoProtocol):
                values["battery_p_max"] = bsol.p_max
                values["battery_gap"] = bsol.gap
    except Exception as exc:  # per-point failures stay in-row, the sweep continues
        values["error"] = f"{type(exc).__name__}: {exc}"
    values.setdefault("error", "")
    values["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
    return SweepRecord(gamma=gamma, n=n, values=values, choi_star=choi_star)


def run_sweep(config: SweepConfig, out_dir: str | Path | None = None) -> list[SweepRecord]:
    """Run every grid point and optionally persist CSV plus a JSON sidecar."""
    points = [(gamma, n) for n in config.n_values for gamma in config.gamma_grid]
    records: list[SweepRecord] = [None] * len(points)  # type: ignore[list-item]

    def work(idx: int) -> None:
        gamma, n = points[idx]
        records[idx] = run_point(config, gamma, n, stream=idx)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            list(pool.map(work, range(len(points))))
    else:
        for idx in range(len(points)):
            work(idx)

    if out_dir is not None:
        write_results(config, records, Path(out_dir))
    return records


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_results(config: SweepConfig, records: list[SweepRecord], out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    json_path = out_dir / "sweep.json"

    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(format_cell(rec.values.get(col)) for col in CSV_COLUMNS))
    csv_path.write_text("\n".join(lines) + "\n")

    sidecar = {
        "format": f"epurify-sweep/{CSV_SCHEMA_VERSION}",
        "version": __version__,
        "config": config.as_dict(),
        "conventions": CONVENTIONS,
        "columns": CSV_COLUMNS,
    }
    if config.emit_protocols:
        sidecar["protocols"] = [
            {
                "gamma": rec.gamma,
                "n": rec.n,
                "choi": complex_matrix_to_json(rec.choi_star) if rec.choi_star is not None else None,
            }
            for rec in records
        ]
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def sweep_all_green(records: list[SweepRecord]) -> bool:
    return all(rec.values.get("error", "") == "" for rec in records)
