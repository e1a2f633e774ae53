"""Time-dependent Hamiltonian schedules for hardware-gate simulation.

A PulseSchedule carries one fixed Pauli-term skeleton with time-dependent
coefficients (for Trotterization) plus an equivalent dense-matrix form (for
the exact-propagation oracle).  Coefficients are linear frequencies in GHz;
drive envelopes specified as angular rates (rad/ns) are converted by 1/(2 pi)
when entering a schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf

from .device import ChainSpec, TransmonSpec, build_chain_hamiltonian, build_single_hamiltonian, exact_spectrum
from .errors import ModelError
from .hamiltonians import chain_encoding_permutation, permute_to_encoded
from .paulis import GRAY, PauliSum, axes_masks, encode_operator, num_code_qubits


class CompiledSkeleton:
    """Mask arrays for the skeleton terms, in canonical (lexicographic) order."""

    __slots__ = ("axes", "flips", "signs", "nys")

    def __init__(self, axes: tuple[str, ...]):
        self.axes = axes
        n = len(axes)
        self.flips = np.empty(n, dtype=np.int64)
        self.signs = np.empty(n, dtype=np.int64)
        self.nys = np.empty(n, dtype=np.int64)
        for i, a in enumerate(axes):
            self.flips[i], self.signs[i], self.nys[i] = axes_masks(a)


@dataclass(frozen=True)
class _Component:
    weight: float | Callable  # scalar, or vectorized function of time (ns)
    coeffs: np.ndarray  # GHz weight per skeleton term
    dense: np.ndarray  # encoded-space matrix (GHz)

    def weight_at(self, t):
        if callable(self.weight):
            return self.weight(t)
        return self.weight if np.isscalar(t) else np.full(np.shape(t), self.weight)


class PulseSchedule:
    """Skeleton + coefficient functions describing H(t)/h over [0, total_time]."""

    def __init__(
        self,
        num_qubits: int,
        skeleton_axes: tuple[str, ...],
        components: tuple[_Component, ...],
        total_time_ns: float,
        breakpoints: tuple[float, ...] = (),
    ):
        self.num_qubits = num_qubits
        self.skeleton = CompiledSkeleton(tuple(skeleton_axes))
        self.components = components
        self.total_time_ns = float(total_time_ns)
        self.breakpoints = tuple(sorted(breakpoints))
        self.dim = 1 << num_qubits

    @property
    def num_terms(self) -> int:
        return len(self.skeleton.axes)

    def coefficients(self, t) -> np.ndarray:
        """GHz coefficient per skeleton term; vectorizes over an array of times."""
        if np.isscalar(t):
            out = np.zeros(self.num_terms)
            for c in self.components:
                out += c.weight_at(t) * c.coeffs
            return out
        t = np.asarray(t, dtype=float)
        out = np.zeros((t.shape[0], self.num_terms))
        for c in self.components:
            out += np.outer(c.weight_at(t), c.coeffs)
        return out

    def dense(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self.components:
            out += c.weight_at(t) * c.dense
        return out

    def theta_table(self, num_steps: int) -> np.ndarray:
        """Rotation angles theta[k, i] = 4 pi c_i(t_mid) dt for the product formula."""
        dt = self.total_time_ns / num_steps
        midpoints = (np.arange(num_steps) + 0.5) * dt
        return np.ascontiguousarray(4.0 * np.pi * dt * self.coefficients(midpoints))


def _assemble(
    parts: list[tuple[PauliSum, float | Callable, np.ndarray]],
    total_time_ns: float,
    breakpoints: tuple[float, ...] = (),
) -> PulseSchedule:
    num_qubits = parts[0][0].num_qubits
    axes = sorted({t.axes for s, _, _ in parts for t in s.terms})
    index = {a: i for i, a in enumerate(axes)}
    comps = []
    for s, weight, dense in parts:
        vec = np.zeros(len(axes))
        for t in s.terms:
            if abs(t.coefficient.imag) > 1e-10:
                raise ValueError("schedule components must be Hermitian")
            vec[index[t.axes]] = t.coefficient.real
        comps.append(_Component(weight, vec, dense))
    return PulseSchedule(num_qubits, tuple(axes), tuple(comps), total_time_ns, breakpoints)


# ---------------------------------------------------------------------------
# Resonant bit-flip drive (truncated-Gaussian envelope, area pi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DragSpec:
    """Rotating-frame drive on a multi-level transmon.

    ``anharmonicities_ghz[j]`` is the level-j anharmonicity (j = 1..d-1, entry 1
    must vanish); ``couplings`` holds the ladder weights for the j-1 <-> j
    transitions, defaulting to the nonlinear-oscillator values sqrt(j) (so the
    0 <-> 1 weight is 1).  The envelope area is pi, making the resonant gate a
    bit flip; ``sigma_ns`` defaults to gate_time_ns / 6.
    """

    gate_time_ns: float
    truncation_d: int
    anharmonicities_ghz: tuple[float, ...]
    sigma_ns: float | None = None
    couplings: tuple[float, ...] | None = None
    detuning_ghz: float = 0.0
    quadrature_fn: Callable | None = None  # Omega_y(t) in rad/ns
    initial_phase: float = 0.0  # carrier phase; a global phase in the rotating frame

    def __post_init__(self):
        d = self.truncation_d
        if len(self.anharmonicities_ghz) != d - 1:
            raise ValueError(f"need {d - 1} anharmonicities for d={d}")
        if abs(self.anharmonicities_ghz[0]) > 1e-9:
            raise ValueError("the first anharmonicity must be zero by definition")
        if self.couplings is not None and len(self.couplings) != d - 1:
            raise ValueError(f"need {d - 1} ladder couplings for d={d}")

    @property
    def sigma(self) -> float:
        return self.gate_time_ns / 6.0 if self.sigma_ns is None else self.sigma_ns

    @property
    def ladder(self) -> np.ndarray:
        if self.couplings is not None:
            return np.asarray(self.couplings, dtype=float)
        return np.sqrt(np.arange(1, self.truncation_d))


def drag_spec_from_transmon(
    transmon: TransmonSpec, d: int, gate_time_ns: float, sigma_ns: float | None = None,
    **kwargs,
) -> DragSpec:
    """Build the drive model from a device spec: anharmonicities come from the
    exact single-transmon spectrum at the spec's flux."""
    spec = exact_spectrum(build_single_hamiltonian(transmon, d), d)
    w = spec.eigenvalues - spec.eigenvalues[0]
    anh = tuple(w[j] - j * w[1] for j in range(1, d))
    return DragSpec(gate_time_ns, d, anh, sigma_ns, **kwargs)


def drag_envelope(t, spec: DragSpec):
    """Truncated-Gaussian drive amplitude in rad/ns; zero at both ends, area pi."""
    tg = spec.gate_time_ns
    sg = spec.sigma
    tarr = np.asarray(t, dtype=float)
    if np.any(tarr < -1e-12) or np.any(tarr > tg + 1e-12):
        raise ValueError(f"time outside the pulse window [0, {tg}]")
    edge = math.exp(-(tg**2) / (8.0 * sg**2))
    norm = math.sqrt(2.0 * math.pi) * sg * erf(tg / (math.sqrt(8.0) * sg)) - tg * edge
    out = math.pi * (np.exp(-((tarr - 0.5 * tg) ** 2) / (2.0 * sg**2)) - edge) / norm
    return float(out) if np.isscalar(t) else out


def build_drag_schedule(spec: DragSpec, scheme: str = GRAY) -> PulseSchedule:
    """Rotating-frame gate Hamiltonian as an encoded schedule.

    H(t)/h = sum_j (j*delta + Delta_j) P_j
           + sum_j lambda_{j-1} [Wx(t)/2 Px_{j-1,j} + Wy(t)/2 Py_{j-1,j}]
    with Wx, Wy the envelopes divided by 2 pi (linear-frequency units).
    """
    d = spec.truncation_d
    lam = spec.ladder
    diag = np.zeros((d, d))
    for j in range(1, d):
        diag[j, j] = j * spec.detuning_ghz + spec.anharmonicities_ghz[j - 1]
    xlad = np.zeros((d, d))
    ylad = np.zeros((d, d), dtype=complex)
    for j in range(1, d):
        xlad[j - 1, j] = xlad[j, j - 1] = 0.5 * lam[j - 1]
        ylad[j - 1, j] = -0.5j * lam[j - 1]
        ylad[j, j - 1] = 0.5j * lam[j - 1]

    perm = chain_encoding_permutation(d, 1, scheme)
    parts = [
        (
            encode_operator(diag, d, scheme),
            1.0,
            permute_to_encoded(diag.astype(complex), perm),
        ),
        (
            encode_operator(xlad, d, scheme),
            lambda t, s=spec: drag_envelope(t, s) / (2.0 * math.pi),
            permute_to_encoded(xlad.astype(complex), perm),
        ),
    ]
    if spec.quadrature_fn is not None:
        parts.append(
            (
                encode_operator(ylad, d, scheme),
                lambda t, s=spec: np.asarray(s.quadrature_fn(t)) / (2.0 * math.pi),
                permute_to_encoded(ylad, perm),
            )
        )
    return _assemble(parts, spec.gate_time_ns)


# ---------------------------------------------------------------------------
# Diabatic two-transmon interaction window
# ---------------------------------------------------------------------------


def constant_schedule(
    hamiltonian_level: np.ndarray,
    d: int,
    total_time_ns: float,
    scheme: str = GRAY,
) -> PulseSchedule:
    """Time-independent single-site schedule from a dense level-space Hamiltonian."""
    perm = chain_encoding_permutation(d, 1, scheme)
    encoded = encode_operator(hamiltonian_level, d, scheme)
    return _assemble(
        [(encoded, 1.0, permute_to_encoded(hamiltonian_level.astype(complex), perm))],
        total_time_ns,
    )


def cphase_schedule(
    device: ChainSpec,
    interaction_flux: float,
    hold_time_ns: float,
    total_time_ns: float | None = None,
    d_each: int = 16,
    sweep_index: int = 0,
    scheme: str = GRAY,
) -> PulseSchedule:
    """Diabatic schedule: interaction Hamiltonian during [0, hold], idle after.

    With total_time omitted the gate is the bare interaction window (the ramps
    are instantaneous, so leading/trailing idle segments only add dressed-state
    phases that the post-rotations absorb).
    """
    from .hamiltonians import encode_chain_hamiltonian

    if device.num_transmons != 2:
        raise ModelError("the diabatic conditional-phase protocol needs two transmons")
    if total_time_ns is None:
        total_time_ns = hold_time_ns
    if not 0 < hold_time_ns <= total_time_ns:
        raise ValueError("need 0 < hold_time <= total_time")
    interaction = device.with_flux(sweep_index, interaction_flux)
    perm = chain_encoding_permutation(d_each, 2, scheme)

    def encoded_pair(spec_i):
        dense = permute_to_encoded(
            build_chain_hamiltonian(spec_i, d_each).astype(complex), perm
        )
        return encode_chain_hamiltonian(spec_i, d_each, scheme), dense

    int_sum, int_dense = encoded_pair(interaction)
    if hold_time_ns >= total_time_ns:
        return _assemble([(int_sum, 1.0, int_dense)], total_time_ns)
    idle_sum, idle_dense = encoded_pair(device)
    hold = hold_time_ns
    parts = [
        (int_sum, lambda t: (np.asarray(t, dtype=float) < hold).astype(float), int_dense),
        (idle_sum, lambda t: (np.asarray(t, dtype=float) >= hold).astype(float), idle_dense),
    ]
    return _assemble(parts, total_time_ns, (hold,))
