"""Run configuration: INI-style sections, strict key validation, and a
round-trip echo of the fully resolved values.

Physical quantities carry unit suffixes in their key names (_ghz, _ff, _ns).
Unknown sections or keys are rejected with their full paths.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import re
from dataclasses import dataclass, field

import numpy as np

from .device import ChainSpec, TransmonSpec
from .paulis import SCHEMES


class ConfigError(ValueError):
    pass


def _parse_float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(x) for x in text.split(",")]


def _parse_int_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    return [int(x) for x in text.split(",")]


def _parse_extra_couplings(text: str) -> list[tuple[int, int, float]]:
    """Sparse couplers as 'i:j:c_ff' triples, comma separated, 1-based sites."""
    out = []
    for part in [p for p in text.split(",") if p.strip()]:
        i, j, c = part.split(":")
        out.append((int(i) - 1, int(j) - 1, float(c)))
    return out


@dataclass
class RunConfig:
    # device
    truncation_d: int = 16
    encoding: str = "gray"
    transmons: list[dict] = field(default_factory=lambda: [
        {"ej_ghz": 20.0, "c_total_ff": 91.0, "flux": 0.0}
    ])
    coupling_ff: list[float] = field(default_factory=list)
    extra_couplings: list[tuple[int, int, float]] = field(default_factory=list)
    # sweep
    sweep_transmon: int = 1  # 1-based
    flux_start: float = 0.0
    flux_stop: float = 0.3
    num_points: int = 7
    # variational
    levels: int = 4
    unit_layers: int = 2
    restarts: int = 2
    max_iterations: int = 3000
    gradient_tolerance: float = 1e-6
    parameter_tolerance: float = 1e-13
    strategy: str = "layer-wise"
    layerwise_passes: int = 2
    beta_policy: str = "fixed"
    beta_scale: float = 2.0
    gamma_offset_ghz: float = 1.0
    escalate_mhz: float = 10.0
    # dynamics
    gate_time_ns: float = 85.32
    sigma_ns: float | None = None
    trotter_steps: list[int] = field(default_factory=lambda: [125, 250, 500, 1000])
    fidelity_samples: int = 300
    error_samples: int = 300
    hold_target_ns: float = 104.64
    crossing_min: float = 0.0
    crossing_max: float = 0.15
    return_threshold: float = 0.99
    full_trotter_steps: list[int] = field(default_factory=lambda: [
        5000, 50000, 200000, 400000, 800000, 1600000, 3200000
    ])
    # resources
    m_values: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    # run
    seed: int = 12345

    def device(self) -> ChainSpec:
        specs = tuple(
            TransmonSpec(t["ej_ghz"], t["c_total_ff"], t["flux"]) for t in self.transmons
        )
        return ChainSpec(specs, tuple(self.coupling_ff), tuple(self.extra_couplings))

    def fluxes(self) -> np.ndarray:
        return np.linspace(self.flux_start, self.flux_stop, self.num_points)

    def validate(self) -> None:
        if self.encoding not in SCHEMES:
            raise ConfigError(f"device.encoding must be one of {SCHEMES}")
        if self.truncation_d < 2 or self.truncation_d & (self.truncation_d - 1):
            raise ConfigError("device.truncation_d must be a power of two")
        if not self.transmons:
            raise ConfigError("at least one [transmon.N] section required")
        if len(self.coupling_ff) != len(self.transmons) - 1:
            raise ConfigError(
                f"device.coupling_ff needs {len(self.transmons) - 1} entries, "
                f"got {len(self.coupling_ff)}"
            )
        if not 1 <= self.sweep_transmon <= len(self.transmons):
            raise ConfigError("sweep.transmon_index out of range")
        if self.num_points < 0:
            raise ConfigError("sweep.num_points must be non-negative")
        if self.beta_policy not in ("fixed", "adaptive"):
            raise ConfigError("variational.beta_policy must be fixed or adaptive")
        if self.strategy not in ("layer-wise", "joint"):
            raise ConfigError("variational.strategy must be layer-wise or joint")
        if sorted(self.trotter_steps) != self.trotter_steps:
            raise ConfigError("dynamics.trotter_steps must be ascending")
        self.device()  # raises on inconsistent device values


_SCHEMA = {
    "device": {
        "truncation_d": ("truncation_d", int),
        "encoding": ("encoding", str),
        "coupling_ff": ("coupling_ff", _parse_float_list),
        "extra_couplings": ("extra_couplings", _parse_extra_couplings),
    },
    "sweep": {
        "transmon_index": ("sweep_transmon", int),
        "flux_start": ("flux_start", float),
        "flux_stop": ("flux_stop", float),
        "num_points": ("num_points", int),
    },
    "variational": {
        "levels": ("levels", int),
        "unit_layers": ("unit_layers", int),
        "restarts": ("restarts", int),
        "max_iterations": ("max_iterations", int),
        "gradient_tolerance": ("gradient_tolerance", float),
        "parameter_tolerance": ("parameter_tolerance", float),
        "strategy": ("strategy", str),
        "layerwise_passes": ("layerwise_passes", int),
        "beta_policy": ("beta_policy", str),
        "beta_scale": ("beta_scale", float),
        "gamma_offset_ghz": ("gamma_offset_ghz", float),
        "escalate_mhz": ("escalate_mhz", float),
    },
    "dynamics": {
        "gate_time_ns": ("gate_time_ns", float),
        "sigma_ns": ("sigma_ns", lambda s: float(s) if s.strip() else None),
        "trotter_steps": ("trotter_steps", _parse_int_list),
        "full_trotter_steps": ("full_trotter_steps", _parse_int_list),
        "fidelity_samples": ("fidelity_samples", int),
        "error_samples": ("error_samples", int),
        "hold_target_ns": ("hold_target_ns", float),
        "crossing_min": ("crossing_min", float),
        "crossing_max": ("crossing_max", float),
        "return_threshold": ("return_threshold", float),
    },
    "resources": {
        "m_values": ("m_values", _parse_int_list),
    },
    "run": {
        "seed": ("seed", int),
    },
}

_TRANSMON_KEYS = ("ej_ghz", "c_total_ff", "flux")


def load_config(path: str, seed_override: int | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    return parse_config(parser, seed_override)


def parse_config(parser: configparser.ConfigParser, seed_override: int | None = None) -> RunConfig:
    cfg = RunConfig()
    transmons: dict[int, dict] = {}
    for section in parser.sections():
        m = re.fullmatch(r"transmon\.(\d+)", section)
        if m:
            idx = int(m.group(1))
            entry = {}
            for key, raw in parser.items(section):
                if key not in _TRANSMON_KEYS:
                    raise ConfigError(f"unknown key [{section}] {key}")
                entry[key] = float(raw)
            missing = [k for k in _TRANSMON_KEYS if k not in entry]
            if missing:
                raise ConfigError(f"[{section}] missing keys: {missing}")
            transmons[idx] = entry
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
            attr, conv = _SCHEMA[section][key]
            try:
                setattr(cfg, attr, conv(raw))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})")
    if transmons:
        indices = sorted(transmons)
        if indices != list(range(1, len(indices) + 1)):
            raise ConfigError(f"transmon sections must be numbered 1..M, got {indices}")
        cfg.transmons = [transmons[i] for i in indices]
    if seed_override is not None:
        cfg.seed = seed_override
    cfg.validate()
    return cfg


def resolved_text(cfg: RunConfig) -> str:
    """Echo of the fully resolved configuration (defaults filled in); the echo
    re-parses to an identical run."""
    parser = configparser.ConfigParser()
    parser["device"] = {
        "truncation_d": str(cfg.truncation_d),
        "encoding": cfg.encoding,
        "coupling_ff": ", ".join(repr(c) for c in cfg.coupling_ff),
        "extra_couplings": ", ".join(
            f"{i + 1}:{j + 1}:{c!r}" for i, j, c in cfg.extra_couplings
        ),
    }
    for n, t in enumerate(cfg.transmons, start=1):
        parser[f"transmon.{n}"] = {k: repr(float(t[k])) for k in _TRANSMON_KEYS}
    parser["sweep"] = {
        "transmon_index": str(cfg.sweep_transmon),
        "flux_start": repr(cfg.flux_start),
        "flux_stop": repr(cfg.flux_stop),
        "num_points": str(cfg.num_points),
    }
    parser["variational"] = {
        "levels": str(cfg.levels),
        "unit_layers": str(cfg.unit_layers),
        "restarts": str(cfg.restarts),
        "max_iterations": str(cfg.max_iterations),
        "gradient_tolerance": repr(cfg.gradient_tolerance),
        "parameter_tolerance": repr(cfg.parameter_tolerance),
        "strategy": cfg.strategy,
        "layerwise_passes": str(cfg.layerwise_passes),
        "beta_policy": cfg.beta_policy,
        "beta_scale": repr(cfg.beta_scale),
        "gamma_offset_ghz": repr(cfg.gamma_offset_ghz),
        "escalate_mhz": repr(cfg.escalate_mhz),
    }
    parser["dynamics"] = {
        "gate_time_ns": repr(cfg.gate_time_ns),
        "sigma_ns": "" if cfg.sigma_ns is None else repr(cfg.sigma_ns),
        "trotter_steps": ", ".join(str(k) for k in cfg.trotter_steps),
        "full_trotter_steps": ", ".join(str(k) for k in cfg.full_trotter_steps),
        "fidelity_samples": str(cfg.fidelity_samples),
        "error_samples": str(cfg.error_samples),
        "hold_target_ns": repr(cfg.hold_target_ns),
        "crossing_min": repr(cfg.crossing_min),
        "crossing_max": repr(cfg.crossing_max),
        "return_threshold": repr(cfg.return_threshold),
    }
    parser["resources"] = {"m_values": ", ".join(str(m) for m in cfg.m_values)}
    parser["run"] = {"seed": str(cfg.seed)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(resolved_text(cfg).encode()).hexdigest()
