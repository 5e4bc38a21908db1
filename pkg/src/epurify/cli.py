"""Command-line interface: sweep, solve, verify, dilate.

Exit codes: 0 when everything is green, 1 on any certificate failure, 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .battery import BatteryProblem
from .config import Tolerances
from .energy import spectral_decompose
from .montecarlo import monte_carlo_validate
from .purification import (
    PurificationProblem,
    nogo_condition,
    protocol_metrics,
    structural_operators,
)
from .sdp import NoProtocol, dual_certificate_check, solve_max_success
from .sweep import (
    ConfigError,
    SweepConfig,
    build_battery_problem,
    build_hamiltonian,
    default_config,
    run_sweep,
    sweep_all_green,
    write_results,
)
from .synthesis import (
    complex_matrix_from_json,
    complex_matrix_to_json,
    dilation_for_protocol,
    verify_dilation,
)

PROTOCOL_FORMAT = "epurify-protocol/1"


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        return _parse_toml(text)
    if path.suffix == ".json":
        return json.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return _parse_toml(text)


def _parse_toml(text: str) -> dict:
    try:
        import tomllib  # py311+
    except ImportError:
        import tomli as tomllib
    return tomllib.loads(text)


def _problem_from_spec(data: dict) -> tuple[PurificationProblem, BatteryProblem | None, Tolerances]:
    tolerances = Tolerances(**data.get("tolerances", {}))
    d = int(data.get("d", 2))
    n = int(data["n"])
    gamma = float(data["gamma"])
    h = build_hamiltonian(data["hamiltonian"], d, n)
    es = spectral_decompose(h, tolerances.cluster_tol)
    problem = PurificationProblem(d=d, n=n, gamma=gamma, energy=es)
    battery = None
    if data.get("battery"):
        battery = build_battery_problem(data["battery"], problem, tolerances.cluster_tol)
    return problem, battery, tolerances


def cmd_sweep(args) -> int:
    data = load_config_file(args.config) if args.config else default_config().as_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.samples is not None:
        data["samples"] = args.samples
    if args.emit_protocols:
        data["emit_protocols"] = True
    if args.dilate:
        data["dilate"] = True
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.battery:
        data["battery"] = load_config_file(args.battery)
    config = SweepConfig.from_dict(data)
    records = run_sweep(config)
    csv_path, json_path = write_results(config, records, Path(args.out))
    failures = [r for r in records if r.values.get("error")]
    for rec in records:
        status = "ok" if not rec.values.get("error") else rec.values["error"]
        print(
            f"gamma={rec.gamma:.4f} n={rec.n} "
            f"F_max={_fmt(rec.values.get('max_fidelity'))} "
            f"p_max={_fmt(rec.values.get('p_max'))} [{status}]"
        )
    print(f"wrote {csv_path} and {json_path}")
    return 0 if not failures else 1


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.8f}"


def cmd_solve(args) -> int:
    spec = _solve_spec_from_args(args)
    problem, battery, tolerances = _problem_from_spec(spec)
    if battery is not None:
        from .battery import build_battery_operators

        s = build_battery_operators(battery, tolerances)
    else:
        s = structural_operators(problem, tolerances)
    report = nogo_condition(s)
    print(f"max_fidelity = {s.max_fidelity:.12f} (baseline {s.baseline:.12f})")
    print(f"purification_exists = {not report.nogo}")
    sol = solve_max_success(s)
    if isinstance(sol, NoProtocol):
        print("no protocol beats the baseline; optimal strategy is the identity")
        return 0
    cert = dual_certificate_check(sol, s)
    fidelity, probability = protocol_metrics(sol.choi_star, s)
    print(f"p_max = {sol.p_max:.12f} (dual bound {sol.dual_bound:.12f}, gap {sol.gap:.3e})")
    print(f"protocol metrics: fidelity = {fidelity:.12f}, probability = {probability:.12f}")
    print(f"certificates: {'ok' if cert.ok else 'FAILED'}")
    if args.out:
        payload = {
            "format": PROTOCOL_FORMAT,
            "d": problem.d,
            "n": problem.n,
            "gamma": problem.gamma,
            "hamiltonian": spec["hamiltonian"],
            "battery": spec.get("battery"),
            "tolerances": tolerances.as_dict(),
            "choi": complex_matrix_to_json(sol.choi_star),
            "metrics": {
                "max_fidelity": s.max_fidelity,
                "baseline": s.baseline,
                "p_max": sol.p_max,
                "dual_bound": sol.dual_bound,
                "gap": sol.gap,
            },
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0 if cert.ok else 1


def _solve_spec_from_args(args) -> dict:
    if args.hamiltonian:
        h_spec = load_config_file(args.hamiltonian)
        if "hamiltonian" in h_spec:
            h_spec = h_spec["hamiltonian"]
    elif args.ising:
        coupling, field_strength = (float(x) for x in args.ising.split(","))
        h_spec = {"type": "ising", "coupling": coupling, "field": field_strength}
    else:
        h_spec = {"type": "ising", "coupling": -0.5, "field": -0.3}
    spec = {
        "d": args.d,
        "n": args.n,
        "gamma": args.gamma,
        "hamiltonian": h_spec,
    }
    if args.battery:
        spec["battery"] = load_config_file(args.battery)
    return spec


def load_protocol(path: str | Path) -> tuple[dict, np.ndarray]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != PROTOCOL_FORMAT:
        raise ConfigError(f"not a protocol file (format {data.get('format')!r})")
    return data, complex_matrix_from_json(data["choi"])


def cmd_verify(args) -> int:
    data, choi = load_protocol(args.protocol)
    problem, battery, tolerances = _problem_from_spec(data)
    if battery is not None:
        from .battery import build_battery_operators

        s = build_battery_operators(battery, tolerances)
        prefix = battery.phi
        kept = 1
    else:
        s = structural_operators(problem, tolerances)
        prefix = None
        kept = 0
    fidelity, probability = protocol_metrics(choi, s)
    print(f"protocol metrics: fidelity = {fidelity:.12f}, probability = {probability:.12f}")
    ok = True
    from .sdp import SdpSolution

    cert = dual_certificate_check(
        SdpSolution(choi_star=choi, p_max=probability, dual_bound=probability, gap=0.0), s
    )
    print(
        f"residuals: psd_min_eig={cert.psd_min_eig:.3e} "
        f"trout_violation={cert.trout_violation:.3e} "
        f"subspace_residual={cert.subspace_residual:.3e}"
    )
    if not cert.residuals_ok:
        ok = False
    if args.samples > 0:
        mc = monte_carlo_validate(
            choi,
            d=problem.d,
            n=problem.n,
            gamma=problem.gamma,
            in_dims=s.in_dims,
            out_dims=s.out_dims,
            kept_out_slot=kept,
            prefix_state=prefix,
            samples=args.samples,
            seed=args.seed,
        )
        f_dev = abs(mc.fidelity - fidelity) / max(mc.fidelity_se, 1e-15)
        p_dev = abs(mc.probability_mean - probability) / max(mc.probability_se, 1e-15)
        print(
            f"monte carlo ({args.samples} samples): fidelity {mc.fidelity:.6f} "
            f"± {mc.fidelity_se:.2e} ({f_dev:.2f} sigma), probability "
            f"{mc.probability_mean:.6f} ± {mc.probability_se:.2e} ({p_dev:.2f} sigma)"
        )
        if f_dev > 4.0 or p_dev > 4.0:
            ok = False
    print("verification:", "ok" if ok else "FAILED")
    return 0 if ok else 1


def cmd_dilate(args) -> int:
    data, choi = load_protocol(args.protocol)
    problem, battery, tolerances = _problem_from_spec(data)
    es = battery.h_tilde if battery is not None else problem.energy
    spec = dilation_for_protocol(choi, es, tolerances.rank_tol)
    report = verify_dilation(spec, choi, es)
    print(
        f"dilation: env_dim={spec.env_dim} "
        f"reconstruction={report.reconstruction_residual:.3e} "
        f"unitarity={report.unitarity_residual:.3e} "
        f"commutator={report.commutator_residual:.3e}"
    )
    payload = spec.to_json_dict()
    payload["format"] = "epurify-dilation/1"
    payload["verification"] = {
        "reconstruction_residual": report.reconstruction_residual,
        "unitarity_residual": report.unitarity_residual,
        "commutator_residual": report.commutator_residual,
    }
    out = args.out or (str(Path(args.protocol).with_suffix("")) + ".dilation.json")
    Path(out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {out}")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epurify",
        description="Optimal universal purification under energy-preserving constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a (gamma, n) parameter sweep")
    p_sweep.add_argument("--config", help="sweep config file (.json or .toml)")
    p_sweep.add_argument("--out", default="results", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--samples", type=int, default=None, help="Monte-Carlo samples per point")
    p_sweep.add_argument("--emit-protocols", action="store_true")
    p_sweep.add_argument("--dilate", action="store_true", help="synthesize and verify dilations")
    p_sweep.add_argument("--jobs", type=int, default=None)
    p_sweep.add_argument("--battery", help="battery config file")
    p_sweep.set_defaults(func=cmd_sweep)

    p_solve = sub.add_parser("solve", help="solve a single problem instance")
    p_solve.add_argument("--gamma", type=float, required=True)
    p_solve.add_argument("--n", type=int, required=True)
    p_solve.add_argument("--d", type=int, default=2)
    p_solve.add_argument("--ising", help="coupling,field for the all-to-all Ising model")
    p_solve.add_argument("--hamiltonian", help="Hamiltonian spec file")
    p_solve.add_argument("--battery", help="battery config file")
    p_solve.add_argument("--out", help="write the optimal protocol to this JSON file")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="check certificates of a stored protocol")
    p_verify.add_argument("--protocol", required=True)
    p_verify.add_argument("--samples", type=int, default=100_000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    p_dilate = sub.add_parser("dilate", help="emit the dilation of a stored protocol")
    p_dilate.add_argument("--protocol", required=True)
    p_dilate.add_argument("--out")
    p_dilate.set_defaults(func=cmd_dilate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
