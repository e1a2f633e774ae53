"""Statevector engine: gate kernels, expectation values, and Haar sampling.

Amplitudes are stored with qubit 0 as the fastest-varying index bit, matching
the Pauli axes convention in transmonsim.paulis.  A StateVector has a
single-writer contract: gates mutate it in place, so never apply gates to one
state from several workers; distinct states are fully independent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .backends import active_backend
from .paulis import PauliSum, PauliTerm, axes_masks


@dataclass(frozen=True)
class RandomSeed:
    """Counter-based RNG key; identical (seed, stream_id) reproduces identical
    samples on every platform, and derived streams are order-independent."""

    seed: int
    stream_id: int = 0

    def derive(self, offset: int) -> "RandomSeed":
        return RandomSeed(self.seed, self.stream_id + offset)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        )


class StateVector:
    """Normalized complex amplitudes over 2^k basis states."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None):
        self.num_qubits = num_qubits
        dim = 1 << num_qubits
        if amplitudes is None:
            amplitudes = np.zeros(dim, dtype=np.complex128)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes

    @classmethod
    def from_amplitudes(cls, amplitudes: np.ndarray) -> "StateVector":
        dim = len(amplitudes)
        k = dim.bit_length() - 1
        if 1 << k != dim:
            raise ValueError(f"amplitude count {dim} is not a power of two")
        return cls(k, amplitudes)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class GateOp:
    """Half-angle rotation exp(-i*theta*G/2) with G one of X_q, Z_q, X_i X_j,
    or an arbitrary unit-coefficient Pauli string."""

    kind: str  # "rx" | "rz" | "xx" | "pauli"
    theta: float
    qubits: tuple[int, ...] = ()
    term: PauliTerm | None = None


def _gate_axes(gate: GateOp, num_qubits: int) -> str:
    for q in gate.qubits:
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")
    axes = ["I"] * num_qubits
    if gate.kind == "rx":
        (q,) = gate.qubits
        axes[q] = "X"
    elif gate.kind == "rz":
        (q,) = gate.qubits
        axes[q] = "Z"
    elif gate.kind == "xx":
        q1, q2 = gate.qubits
        axes[q1] = "X"
        axes[q2] = "X"
    elif gate.kind == "pauli":
        term = gate.term
        if term is None:
            raise ValueError("pauli gate needs a term")
        coeff = complex(term.coefficient)
        if abs(abs(coeff) - 1.0) > 1e-12 or abs(coeff.imag) > 1e-12:
            raise ValueError(
                "pauli rotation requires a unit-magnitude real coefficient direction"
            )
        if len(term.axes) != num_qubits:
            raise ValueError("term width does not match the state")
        return term.axes
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return "".join(axes)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply the gate in place and return the state."""
    axes = _gate_axes(gate, state.num_qubits)
    flip, sign, ny = axes_masks(axes)
    theta = gate.theta
    if gate.kind == "pauli" and gate.term is not None and gate.term.coefficient.real < 0:
        theta = -theta
    active_backend().apply_pauli_rotation(state.amplitudes, flip, sign, ny, theta)
    return state


class CompiledObservable:
    """Mask arrays for a Hermitian PauliSum, ready for the kernel backends."""

    __slots__ = ("num_qubits", "coeffs", "flips", "signs", "nys")

    def __init__(self, observable: PauliSum):
        if not observable.is_hermitian():
            raise ValueError("observable must be Hermitian (real coefficients)")
        self.num_qubits = observable.num_qubits
        n = len(observable.terms)
        self.coeffs = np.empty(n, dtype=np.float64)
        self.flips = np.empty(n, dtype=np.int64)
        self.signs = np.empty(n, dtype=np.int64)
        self.nys = np.empty(n, dtype=np.int64)
        for i, t in enumerate(observable.terms):
            self.coeffs[i] = t.coefficient.real
            self.flips[i], self.signs[i], self.nys[i] = axes_masks(t.axes)


def expectation(state: StateVector, observable: PauliSum | CompiledObservable) -> float:
    """Exact <psi|O|psi>; no sampling noise."""
    if isinstance(observable, PauliSum):
        observable = CompiledObservable(observable)
    if observable.num_qubits != state.num_qubits:
        raise ValueError("observable and state widths differ")
    return active_backend().expectation(
        state.amplitudes,
        observable.coeffs,
        observable.flips,
        observable.signs,
        observable.nys,
    )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the first argument conjugated."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("state widths differ")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def haar_random_in_subspace(
    basis: list[StateVector] | np.ndarray, seed: RandomSeed
) -> StateVector:
    """Uniform random state on the sphere of span(basis).

    Coefficients are i.i.d. standard complex Gaussians, normalized; the basis
    must be orthonormal to 1e-10.
    """
    if isinstance(basis, np.ndarray):
        cols = basis
        num_qubits = int(cols.shape[0]).bit_length() - 1
    else:
        cols = np.column_stack([s.amplitudes for s in basis])
        num_qubits = basis[0].num_qubits
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(cols.shape[1]))) > 1e-10:
        raise ValueError("subspace basis is not orthonormal")
    rng = seed.generator()
    c = rng.standard_normal(cols.shape[1]) + 1j * rng.standard_normal(cols.shape[1])
    c /= np.linalg.norm(c)
    return StateVector(num_qubits, cols @ c)


def save_state(path: str, state: StateVector, fmt: str = "bin") -> None:
    """Dump amplitudes: 'bin' writes a little-endian u64 qubit count followed by
    complex doubles; 'csv' writes index,re,im rows for debugging."""
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", state.num_qubits))
            fh.write(state.amplitudes.astype("<c16").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write("index,re,im\n")
            for i, a in enumerate(state.amplitudes):
                fh.write(f"{i},{a.real:.17g},{a.imag:.17g}\n")
    else:
        raise ValueError(f"unknown dump format {fmt!r}")


def load_state(path: str) -> StateVector:
    with open(path, "rb") as fh:
        (k,) = struct.unpack("<Q", fh.read(8))
        amps = np.frombuffer(fh.read(), dtype="<c16").astype(np.complex128)
    return StateVector(int(k), amps)
