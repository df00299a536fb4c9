"""Command-line front end: design reports, regression table, mode/spectrum
dumps, and single-drive time evolution, as JSON or CSV.

Exit codes: 0 on success, 2 for configuration/schema errors, 1 for any
other stage failure (reported with the failing stage's name).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .addressing import (DriveField, coupling_report, epsilon_c, lamb_dicke,
                         min_spectral_gap, spectrum)
from .core import ConfigError, TrapConfig, check_linearity, load_config, with_gradient
from .crystal import min_spacing, solve_chain, spacing_law
from .dynamics import DriveSpec, QuantumState, evolve_sampled, rabi_frequency_analytic
from .fidelity import CONVENTIONS, estimate_spread, gate_error_estimate
from .reference import REFERENCE_TABLE
from .zeeman import QubitLevels

REPORT_SCHEMA_VERSION = 1


class StageError(RuntimeError):
    """Failure inside one pipeline stage, labelled with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"error in stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


def _run_stage(stage: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ConfigError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(output, "w") as handle:
            handle.write(text)


def _json_dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _csv_from_rows(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _chain_summary(config: TrapConfig, chain) -> dict:
    summary = {
        "positions_m": [float(z) for z in chain.positions],
        "length_scale_z0_m": float(chain.length_scale_z0),
        "mode_frequencies_rad_per_s": [float(w) for w in chain.mode_frequencies],
        "mode_frequencies_hz": [float(w) / (2.0 * math.pi) for w in chain.mode_frequencies],
    }
    if config.n_ions >= 2:
        summary["min_spacing_m"] = float(min_spacing(chain.positions))
        summary["spacing_law_m"] = float(spacing_law(config.n_ions, chain.length_scale_z0))
    return summary


def build_design_report(config: TrapConfig, seed: int = 0, samples: int | None = None,
                        convention: str = "mean", bus_mode: int = 0,
                        include_fidelity: bool = True,
                        numeric_oracle_samples: int | None = None) -> dict:
    """Run the chain -> Zeeman -> addressing -> fidelity pipeline into a dict."""
    linearity = _run_stage("linearity", check_linearity, config)
    chain = _run_stage("crystal", solve_chain, config)
    levels = QubitLevels(config.species)
    coupling = _run_stage("addressing", coupling_report, config, chain, levels,
                          bus_mode=bus_mode)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": "gradion", "version": __version__},
        "timestamp": _timestamp(),
        "seed": seed,
        "config": config.to_dict(),
        "linearity": {"is_linear": bool(linearity.is_linear),
                      "margin": float(linearity.margin)},
        "chain": _chain_summary(config, chain),
        "coupling": coupling.to_dict(),
        "fidelity": None,
    }
    if include_fidelity and config.n_ions >= 2:
        spread = _run_stage("fidelity", estimate_spread, config, levels,
                            sample_budget=samples, seed=seed, convention=convention)
        error = _run_stage("fidelity", gate_error_estimate, spread,
                           config.omega_z / 10.0,
                           numeric_samples=numeric_oracle_samples, seed=seed)
        report["fidelity"] = {"spread": spread.to_dict(),
                              "gate_error": error.to_dict()}
    return report


def _design_csv(report: dict) -> str:
    rows = []
    for ion in report["coupling"]["ions"]:
        row = dict(ion)
        row["required_gradient_t_per_m"] = report["coupling"]["required_gradient_t_per_m"]
        row["min_spectral_gap_rad_per_s"] = report["coupling"]["min_spectral_gap_rad_per_s"]
        if report["fidelity"] is not None:
            row["sigma_k_rad_per_s"] = report["fidelity"]["spread"]["sigma_k_rad_per_s"][row["index"]]
            row["gate_error_closed_form"] = report["fidelity"]["gate_error"]["error_closed_form"]
        rows.append(row)
    return _csv_from_rows(rows)


def cmd_design(args) -> int:
    config = load_config(args.config)
    report = build_design_report(
        config, seed=args.seed, samples=args.samples, convention=args.convention,
        bus_mode=args.bus_mode, include_fidelity=not args.no_fidelity,
        numeric_oracle_samples=args.numeric_oracle_samples)
    if args.format == "json":
        _emit(_json_dump(report), args.output)
    else:
        _emit(_design_csv(report), args.output)
    return 0


def table1_rows(seed: int = 0, samples: int | None = None, convention: str = "mean",
                include_fidelity: bool = True) -> list[dict]:
    """Recompute the reference design table; one row per (cell, quantity)."""
    rows = []
    for (n_ions, omega_z_hz), reference in REFERENCE_TABLE.items():
        config = load_config({
            "species": "171Yb+",
            "n_ions": n_ions,
            "omega_z": omega_z_hz,
            "frequency_units": "Hz",
        })
        levels = QubitLevels(config.species)
        coupling = _run_stage("addressing", coupling_report, config)
        designed = with_gradient(config, coupling.required_gradient)
        at_gradient = _run_stage("addressing", coupling_report, designed)
        computed = {
            "gradient_t_per_m": coupling.required_gradient,
            "epsilon_c": float(at_gradient.epsilon_c[n_ions // 2]),
        }
        if include_fidelity:
            spread = _run_stage("fidelity", estimate_spread, designed, levels,
                                sample_budget=samples, seed=seed,
                                convention=convention)
            computed["gate_error"] = gate_error_estimate(
                spread, config.omega_z / 10.0).error_closed_form
        for quantity, value in computed.items():
            published = reference[quantity]
            rows.append({
                "n_ions": n_ions,
                "omega_z_hz": omega_z_hz,
                "quantity": quantity,
                "computed": value,
                "published": published,
                "rel_deviation": value / published - 1.0,
            })
    return rows


def cmd_table1(args) -> int:
    rows = table1_rows(seed=args.seed, samples=args.samples,
                       convention=args.convention,
                       include_fidelity=not args.no_fidelity)
    if args.format == "json":
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": {"name": "gradion", "version": __version__},
            "timestamp": _timestamp(),
            "seed": args.seed,
            "rows": rows,
        }
        _emit(_json_dump(payload), args.output)
    else:
        _emit(_csv_from_rows(rows), args.output)
    return 0


def cmd_modes(args) -> int:
    config = load_config(args.config)
    chain = _run_stage("crystal", solve_chain, config)
    rows = []
    for l, freq in enumerate(chain.mode_frequencies):
        row = {
            "mode_index": l,
            "frequency_rad_per_s": float(freq),
            "frequency_hz": float(freq) / (2.0 * math.pi),
            "frequency_over_omega_z": float(freq) / config.omega_z,
        }
        for i in range(config.n_ions):
            row[f"component_{i}"] = float(chain.mode_vectors[i, l])
        rows.append(row)
    if args.format == "json":
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": config.to_dict(),
            "chain": _chain_summary(config, chain),
            "modes": rows,
        }
        _emit(_json_dump(payload), args.output)
    else:
        _emit(_csv_from_rows(rows), args.output)
    return 0


def cmd_spectrum(args) -> int:
    config = load_config(args.config)
    chain = _run_stage("crystal", solve_chain, config)
    levels = QubitLevels(config.species)
    spec = _run_stage("addressing", spectrum, config, chain, levels)
    rows = []
    lower = spec.lower_sidebands()
    upper = spec.upper_sidebands()
    for k in range(config.n_ions):
        row = {
            "ion_index": k,
            "carrier_rad_per_s": float(spec.carriers[k]),
            "carrier_hz": float(spec.carriers[k]) / (2.0 * math.pi),
        }
        for l in range(config.n_ions):
            row[f"red_sideband_{l}_rad_per_s"] = float(lower[k, l])
            row[f"blue_sideband_{l}_rad_per_s"] = float(upper[k, l])
        rows.append(row)
    gap = None
    if config.n_ions >= 2:
        gap = float(min_spectral_gap(spec, args.bus_mode))
    if args.format == "json":
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": config.to_dict(),
            "bus_mode_index": args.bus_mode,
            "min_spectral_gap_rad_per_s": gap,
            "ions": rows,
        }
        _emit(_json_dump(payload), args.output)
    else:
        _emit(_csv_from_rows(rows), args.output)
    return 0


def cmd_evolve(args) -> int:
    config = load_config(args.config)
    chain = _run_stage("crystal", solve_chain, config)
    levels = QubitLevels(config.species)
    ion = args.ion if args.ion is not None else config.n_ions // 2
    mode = args.mode
    if not 0 <= mode < config.n_ions or not 0 <= ion < config.n_ions:
        raise StageError("addressing", IndexError(
            f"ion/mode index out of range for {config.n_ions} ions"))
    omega_l = float(chain.mode_frequencies[mode])

    eps = _run_stage("addressing", epsilon_c, config, chain, levels, ion, mode)
    drive_frequency = args.drive_frequency_hz * 2.0 * math.pi if args.drive_frequency_hz \
        else config.species.hyperfine_splitting
    field = DriveField(drive_frequency=drive_frequency, incidence_angle=args.theta,
                       rabi_frequency=args.rabi_hz * 2.0 * math.pi)
    eta = _run_stage("addressing", lamb_dicke, config, chain, field, ion, mode)
    eta_eff = math.hypot(eta, eps)

    if args.detuning_hz is not None:
        detuning = 2.0 * math.pi * args.detuning_hz
    else:
        detuning = {"carrier": 0.0, "blue": omega_l, "red": -omega_l}[args.sideband]

    rabi = args.rabi_hz * 2.0 * math.pi
    if args.duration_s is not None:
        duration = args.duration_s
    else:
        n_from, n_to = args.initial_fock, args.initial_fock
        if args.sideband == "blue":
            n_to += 1
        elif args.sideband == "red":
            n_to = max(0, n_from - 1)
        pulse_rabi = rabi_frequency_analytic(n_from, n_to, eta_eff, rabi)
        if pulse_rabi == 0.0:
            raise StageError("dynamics", ValueError(
                "requested transition has zero coupling; give --duration-s"))
        duration = args.pulses * math.pi / pulse_rabi

    drive = DriveSpec(rabi_frequency=rabi, detuning=detuning, eta=eta,
                      epsilon_c=eps, duration=duration)
    state = QuantumState.basis(args.initial_spin, args.initial_fock, args.n_max)
    times, amplitudes = _run_stage("dynamics", evolve_sampled, state, drive, omega_l,
                                   args.time_samples)
    populations = np.abs(amplitudes) ** 2

    params = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": "gradion", "version": __version__},
        "config": config.to_dict(),
        "ion_index": ion,
        "mode_index": mode,
        "omega_l_rad_per_s": omega_l,
        "eta": eta,
        "epsilon_c": eps,
        "eta_eff": eta_eff,
        "rabi_frequency_rad_per_s": rabi,
        "detuning_rad_per_s": detuning,
        "duration_s": duration,
        "n_max": args.n_max,
        "initial_spin": args.initial_spin,
        "initial_fock": args.initial_fock,
    }
    labels = [f"p_s{s}_n{n}" for s in (0, 1) for n in range(args.n_max + 1)]
    if args.format == "json":
        payload = dict(params)
        payload["times_s"] = [float(t) for t in times]
        payload["populations"] = {label: [float(p) for p in populations[:, i]]
                                  for i, label in enumerate(labels)}
        _emit(_json_dump(payload), args.output)
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps(params, sort_keys=True) + "\n")
        writer = csv.writer(buf)
        writer.writerow(["time_s"] + labels)
        for i, t in enumerate(times):
            writer.writerow([repr(float(t))] + [repr(float(p)) for p in populations[i]])
        _emit(buf.getvalue(), args.output)
    return 0


def _add_io_arguments(parser: argparse.ArgumentParser, default_format: str) -> None:
    parser.add_argument("--format", choices=("json", "csv"), default=default_format,
                        help=f"output format (default: {default_format})")
    parser.add_argument("--output", default=None,
                        help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradion",
        description="Design and verify microwave-driven ion-trap quantum logic "
                    "in a static magnetic field gradient.")
    parser.add_argument("--version", action="version", version=f"gradion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="full design report for one configuration")
    p.add_argument("config", help="YAML config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None,
                   help="configuration sample budget for the spread estimate")
    p.add_argument("--convention", choices=CONVENTIONS, default="mean",
                   help="force convention for the addressed ion")
    p.add_argument("--bus-mode", type=int, default=0)
    p.add_argument("--no-fidelity", action="store_true",
                   help="skip the Monte-Carlo spread stage")
    p.add_argument("--numeric-oracle-samples", type=int, default=None,
                   help="also run the numeric gate-error oracle with this many samples")
    _add_io_arguments(p, "json")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("table1", help="recompute the reference design table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--convention", choices=CONVENTIONS, default="mean")
    p.add_argument("--no-fidelity", action="store_true")
    _add_io_arguments(p, "csv")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("modes", help="axial normal-mode frequencies and vectors")
    p.add_argument("config")
    _add_io_arguments(p, "csv")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("spectrum", help="per-ion carrier and sideband frequencies")
    p.add_argument("config")
    p.add_argument("--bus-mode", type=int, default=0)
    _add_io_arguments(p, "csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="time evolution of one driven ion and mode")
    p.add_argument("config")
    p.add_argument("--rabi-hz", type=float, required=True,
                   help="Rabi frequency / 2 pi in Hz")
    p.add_argument("--sideband", choices=("carrier", "blue", "red"), default="blue")
    p.add_argument("--detuning-hz", type=float, default=None,
                   help="explicit detuning / 2 pi in Hz (overrides --sideband)")
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--pulses", type=float, default=1.0,
                   help="duration in analytic pi-pulse units when --duration-s absent")
    p.add_argument("--ion", type=int, default=None, help="ion index (default: centre)")
    p.add_argument("--mode", type=int, default=0, help="vibrational mode index")
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--initial-spin", type=int, choices=(0, 1), default=0)
    p.add_argument("--initial-fock", type=int, default=0)
    p.add_argument("--time-samples", type=int, default=201)
    p.add_argument("--theta", type=float, default=0.0,
                   help="drive incidence angle in radians")
    p.add_argument("--drive-frequency-hz", type=float, default=None,
                   help="drive frequency / 2 pi for the recoil parameter "
                        "(default: qubit frequency)")
    _add_io_arguments(p, "csv")
    p.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
