"""Command-line surface: spectrum sweeps, encoding dumps, variational runs,
gate simulations, and resource tables, with deterministic machine-readable
outputs plus a manifest per run.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .ansatz import closed_form_counts, constructive_counts, build_hierarchical_ansatz
from .config import RunConfig, config_hash, load_config, resolved_text
from .device import cosine_phase_operator, number_operator
from .dynamics import average_gate_fidelity, exact_propagator, run_cphase_protocol, trotter_scan
from .paulis import SCHEMES, encode_operator, format_term, num_code_qubits, naive_cnot_upper_bound
from .pulses import build_drag_schedule, drag_spec_from_transmon
from .statevector import RandomSeed, StateVector
from .workflows import single_transmon_vqd_sweep, spectrum_rows, two_transmon_vqd_sweep

ENERGY_FMT = "%.12e"
STAT_FMT = "%.6e"


def _version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, cwd=os.path.dirname(__file__), timeout=5,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


class OutputDir:
    def __init__(self, path: str):
        self.path = path
        self.files: list[str] = []
        os.makedirs(path, exist_ok=True)

    def write_text(self, name: str, text: str) -> str:
        full = os.path.join(self.path, name)
        with open(full, "w") as fh:
            fh.write(text)
        self.files.append(name)
        return full

    def write_csv(self, name: str, header: list[str], rows: list[list[str]]) -> str:
        body = [",".join(header)] + [",".join(r) for r in rows]
        return self.write_text(name, "\n".join(body) + "\n")

    def write_json(self, name: str, payload) -> str:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finalize(out: OutputDir, command: str, cfg: RunConfig, started: float) -> None:
    out.write_text("resolved.ini", resolved_text(cfg))
    out.write_json(
        "manifest.json",
        {
            "command": command,
            "config_hash": config_hash(cfg),
            "version": _version_string(),
            "wall_time_s": round(time.time() - started, 3),
            "outputs": sorted(out.files),
        },
    )


def cmd_spectrum(cfg: RunConfig, out: OutputDir, args) -> None:
    device = cfg.device()
    rows = spectrum_rows(
        device, cfg.truncation_d, cfg.levels, cfg.fluxes(), cfg.sweep_transmon - 1
    )
    has_gap = any("gap_ghz" in r for r in rows)
    header = ["flux", "level_index", "energy_ghz", "label"] + (
        ["gap_ghz"] if has_gap else []
    )
    body = []
    for r in rows:
        line = [
            ENERGY_FMT % r["flux"],
            str(r["level_index"]),
            ENERGY_FMT % r["energy_ghz"],
            r["label"],
        ]
        if has_gap:
            line.append(ENERGY_FMT % r["gap_ghz"])
        body.append(line)
    out.write_csv("spectrum.csv", header, body)


def cmd_encode(cfg: RunConfig, out: OutputDir, args) -> None:
    d = cfg.truncation_d
    operators = {
        "number": number_operator(d),
        "cosine_phase": cosine_phase_operator(d),
    }
    summary = []
    for op_name, op in operators.items():
        for scheme in SCHEMES:
            encoded = encode_operator(op, d, scheme)
            k = num_code_qubits(d, scheme)
            lines = [f"# d={d} scheme={scheme} qubits={k}"]
            lines += [format_term(t) for t in encoded.terms]
            out.write_text(f"encode_{op_name}_{scheme}.txt", "\n".join(lines) + "\n")
            summary.append(
                [
                    op_name,
                    scheme,
                    str(len(encoded)),
                    str(max((t.weight for t in encoded.terms), default=0)),
                    str(naive_cnot_upper_bound(encoded)),
                ]
            )
    out.write_csv(
        "summary.csv", ["operator", "scheme", "terms", "max_weight", "cnot_upper_bound"], summary
    )


def _vqd_chunk(payload):
    cfg_kwargs, fluxes = payload
    from .variational import OptimizerConfig

    cfg: RunConfig = cfg_kwargs["cfg"]
    device = cfg.device()
    opt = OptimizerConfig(
        max_iterations=cfg.max_iterations,
        gradient_tolerance=cfg.gradient_tolerance,
        parameter_tolerance=cfg.parameter_tolerance,
        strategy=cfg.strategy,
        restarts=cfg.restarts,
        seed=cfg.seed,
        layerwise_passes=cfg.layerwise_passes,
    )
    common = dict(
        levels=cfg.levels,
        unit_layers=cfg.unit_layers,
        scheme=cfg.encoding,
        config=opt,
        beta_policy=cfg.beta_policy,
        beta_scale=cfg.beta_scale,
        gamma_offset_ghz=cfg.gamma_offset_ghz,
        escalate_ghz=cfg.escalate_mhz * 1e-3,
    )
    if device.num_transmons == 1:
        return single_transmon_vqd_sweep(
            device.transmons[0], cfg.truncation_d, fluxes, **common
        )
    if device.num_transmons == 2:
        return two_transmon_vqd_sweep(
            device, cfg.truncation_d, fluxes,
            sweep_index=cfg.sweep_transmon - 1, **common,
        )
    raise ValueError("vqd sweeps support one- and two-transmon devices")


def cmd_vqd(cfg: RunConfig, out: OutputDir, args) -> None:
    fluxes = cfg.fluxes()
    workers = min(args.workers, max(len(fluxes), 1))
    if workers > 1 and len(fluxes) > 1:
        chunks = [({"cfg": cfg}, np.array([f])) for f in fluxes]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_vqd_chunk, chunks))
        rows = [row for chunk in results for row in chunk]
    else:
        rows = _vqd_chunk(({"cfg": cfg}, fluxes))
    rows.sort(key=lambda r: (r.flux, r.level))
    body = [
        [
            ENERGY_FMT % r.flux,
            str(r.level),
            ENERGY_FMT % r.energy_ghz,
            ENERGY_FMT % r.exact_energy_ghz,
            ENERGY_FMT % r.abs_error_ghz,
            str(r.iterations),
            str(r.converged).lower(),
        ]
        for r in rows
    ]
    out.write_csv(
        "vqd.csv",
        ["flux", "level", "energy_ghz", "exact_energy_ghz", "abs_error_ghz", "iterations", "converged"],
        body,
    )


def _scan_csv(out: OutputDir, scan) -> None:
    body = [
        [
            str(p.num_steps),
            STAT_FMT % p.dt_ns,
            STAT_FMT % p.mean_error,
            STAT_FMT % p.std_error,
            STAT_FMT % p.mean_fidelity,
            STAT_FMT % p.std_fidelity,
        ]
        for p in scan.points
    ]
    out.write_csv(
        "scan.csv",
        ["k_steps", "dt_ns", "mean_error", "std_error", "mean_fidelity", "std_fidelity"],
        body,
    )


def _fit_payload(fit) -> dict:
    return {
        "prefactor": fit.prefactor,
        "exponent": fit.exponent,
        "dt_range_ns": list(fit.dt_range),
        "residual": fit.residual,
        "degenerate": fit.degenerate,
    }


def cmd_gate(cfg: RunConfig, out: OutputDir, args) -> None:
    if cfg.fidelity_samples < 1 or cfg.error_samples < 1:
        raise ValueError("at least 1 sample required")
    seed = RandomSeed(cfg.seed)
    if args.kind == "bitflip":
        transmon = cfg.device().transmons[0]
        spec = drag_spec_from_transmon(
            transmon, cfg.truncation_d, cfg.gate_time_ns, cfg.sigma_ns
        )
        schedule = build_drag_schedule(spec, cfg.encoding)
        u_exact = exact_propagator(schedule)
        k = schedule.num_qubits
        basis = np.zeros((1 << k, 2), dtype=complex)
        from .paulis import encoded_level_index

        basis[encoded_level_index(0, cfg.truncation_d, cfg.encoding), 0] = 1.0
        basis[encoded_level_index(1, cfg.truncation_d, cfg.encoding), 1] = 1.0
        ideal = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        report = average_gate_fidelity(
            lambda st: StateVector(k, u_exact @ st.amplitudes),
            ideal, basis, cfg.fidelity_samples, seed, "levels {0,1}",
        )
        scan = trotter_scan(
            schedule, cfg.trotter_steps, basis, cfg.error_samples, seed.derive(10**6),
            ideal=ideal,
        )
        _scan_csv(out, scan)
        out.write_json(
            "summary.json",
            {
                "gate": "bitflip",
                "gate_time_ns": cfg.gate_time_ns,
                "sigma_ns": spec.sigma,
                "mean_fidelity": report.mean,
                "std_fidelity": report.std,
                "fidelity_samples": report.num_samples,
                "fit": _fit_payload(scan.fit),
            },
        )
        return

    device = cfg.device()
    if device.num_transmons != 2:
        raise ValueError("the conditional-phase gate needs a two-transmon device")
    result = run_cphase_protocol(
        device,
        d_each=cfg.truncation_d,
        crossing_range=(cfg.crossing_min, cfg.crossing_max),
        hold_target_ns=cfg.hold_target_ns,
        sweep_index=cfg.sweep_transmon - 1,
        scheme=cfg.encoding,
        return_threshold=cfg.return_threshold,
    )
    report = average_gate_fidelity(
        result.channel, result.ideal, result.subspace_basis,
        cfg.fidelity_samples, seed, "dressed {00,01,10,11}",
    )
    k_list = cfg.full_trotter_steps if args.full else cfg.trotter_steps
    scan = trotter_scan(
        result.schedule, k_list, result.subspace_basis, cfg.error_samples,
        seed.derive(10**6), ideal=result.ideal, correction=result.correction,
    )
    _scan_csv(out, scan)
    rec = result.record
    out.write_json(
        "calibration.json",
        {
            "gate": "cphase",
            "operating_flux": rec.operating_flux,
            "hold_time_ns": rec.hold_time_ns,
            "gate_time_ns": rec.gate_time_ns,
            "post_phases_rad": list(rec.post_phases),
            "min_gap_ghz": rec.min_gap_ghz,
            "crossing_flux": rec.crossing_flux,
            "population_return": rec.population_return,
            "conditional_phase_rad": rec.conditional_phase,
            "channel_deviation": rec.channel_deviation,
            "return_index": rec.return_index,
            "mean_fidelity": report.mean,
            "std_fidelity": report.std,
            "fidelity_samples": report.num_samples,
            "fit": _fit_payload(scan.fit),
        },
    )


def cmd_resources(cfg: RunConfig, out: OutputDir, args) -> None:
    body = []
    for m in cfg.m_values:
        formula = closed_form_counts(m)
        built = constructive_counts(build_hierarchical_ansatz(m))
        match = all(formula[k] == built[k] for k in formula)
        body.append(
            [
                str(m),
                str(formula["n_xx"]), str(built["n_xx"]),
                str(formula["depth_parallel"]), str(built["depth_parallel"]),
                str(formula["depth_sequential"]), str(built["depth_sequential"]),
                str(match).lower(),
            ]
        )
    out.write_csv(
        "resources.csv",
        [
            "m", "n_xx_formula", "n_xx_constructed",
            "depth_parallel_formula", "depth_parallel_constructed",
            "depth_sequential_formula", "depth_sequential_constructed", "match",
        ],
        body,
    )


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "encode": cmd_encode,
    "vqd": cmd_vqd,
    "gate": cmd_gate,
    "resources": cmd_resources,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transmonsim",
        description="Design and validate transmon sub-modules in silico",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI run configuration")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override [run] seed")
    common.add_argument(
        "--workers", type=int, default=os.cpu_count() or 1,
        help="worker pool size (default: available parallelism)",
    )
    common.add_argument(
        "--full", action="store_true",
        help="run the long opt-in variants (e.g. the extended conditional-phase scan)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="exact eigenvalues vs flux")
    sub.add_parser("encode", parents=[common], help="Pauli term dumps and resource stats")
    sub.add_parser("vqd", parents=[common], help="variational spectrum sweep")
    gate = sub.add_parser("gate", parents=[common], help="hardware gate simulation")
    gate.add_argument("kind", choices=["bitflip", "cphase"])
    sub.add_parser("resources", parents=[common], help="ansatz scaling table")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        cfg = load_config(args.config, args.seed)
        if args.workers and args.workers > 1:
            try:
                import numba

                numba.set_num_threads(min(args.workers, numba.config.NUMBA_NUM_THREADS))
            except (ImportError, ValueError):
                pass
        out = OutputDir(args.out)
        _COMMANDS[args.command](cfg, out, args)
        _finalize(out, args.command, cfg, started)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
