"""Weighted Pauli-string sums and qubit encodings of truncated level operators.

Conventions
-----------
- A term's ``axes`` string lists one of I/X/Y/Z per qubit with qubit 0 at the
  leftmost position.  Qubit q corresponds to bit q (the q-th least significant
  bit) of a basis-state index, and code words are written MSB-first, so the
  code word "0011" puts ones on qubits 0 and 1.
- Sums are kept simplified: unique axes strings, coefficients below 1e-12
  dropped, terms ordered lexicographically by axes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CapacityError

PRUNE_TOL = 1e-12
MATRIX_QUBIT_GUARD = 12

STANDARD_BINARY = "standard-binary"
GRAY = "gray"
UNARY = "unary"
SCHEMES = (STANDARD_BINARY, GRAY, UNARY)

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-qubit products: (a, b) -> (phase, result)
_PAULI_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    axes: str

    def __post_init__(self):
        if any(c not in "IXYZ" for c in self.axes):
            raise ValueError(f"bad axes string {self.axes!r}")

    @property
    def weight(self) -> int:
        """Number of non-identity positions."""
        return sum(1 for c in self.axes if c != "I")


class PauliSum:
    """Immutable simplified sum of Pauli terms over a fixed register width."""

    __slots__ = ("num_qubits", "terms")

    def __init__(self, num_qubits: int, terms=(), _simplified: bool = False):
        object.__setattr__(self, "num_qubits", num_qubits)
        if _simplified:
            object.__setattr__(self, "terms", tuple(terms))
            return
        acc: dict[str, complex] = {}
        for t in terms:
            if len(t.axes) != num_qubits:
                raise ValueError(
                    f"term width {len(t.axes)} does not match register width {num_qubits}"
                )
            acc[t.axes] = acc.get(t.axes, 0j) + complex(t.coefficient)
        kept = tuple(
            PauliTerm(c, axes)
            for axes, c in sorted(acc.items())
            if abs(c) > PRUNE_TOL
        )
        object.__setattr__(self, "terms", kept)

    def __setattr__(self, *_):
        raise AttributeError("PauliSum is immutable")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({t.coefficient:g})*{t.axes}" for t in self.terms[:6])
        more = f" + ... [{len(self.terms)} terms]" if len(self.terms) > 6 else ""
        return f"PauliSum({self.num_qubits} qubits: {body}{more})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.num_qubits == other.num_qubits and all(
            a.axes == b.axes and abs(a.coefficient - b.coefficient) <= 1e-12
            for a, b in itertools.zip_longest(
                self.terms, other.terms, fillvalue=PauliTerm(np.inf, "")
            )
        )

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        scale = max((abs(t.coefficient) for t in self.terms), default=1.0)
        return all(abs(t.coefficient.imag) <= tol * max(scale, 1.0) for t in self.terms)

    def coefficient_of(self, axes: str) -> complex:
        for t in self.terms:
            if t.axes == axes:
                return t.coefficient
        return 0j


def identity_sum(num_qubits: int, coefficient: complex = 1.0) -> PauliSum:
    return PauliSum(num_qubits, [PauliTerm(coefficient, "I" * num_qubits)])


def add(a: PauliSum, b: PauliSum) -> PauliSum:
    if a.num_qubits != b.num_qubits:
        raise ValueError("register widths differ")
    return PauliSum(a.num_qubits, list(a.terms) + list(b.terms))


def scale(a: PauliSum, c: complex) -> PauliSum:
    return PauliSum(a.num_qubits, [PauliTerm(t.coefficient * c, t.axes) for t in a.terms])


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product with full +-1, +-i phase tracking."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("register widths differ")
    out = []
    for ta in a.terms:
        for tb in b.terms:
            phase = ta.coefficient * tb.coefficient
            axes = []
            for pa, pb in zip(ta.axes, tb.axes):
                ph, pc = _PAULI_PRODUCT[(pa, pb)]
                phase *= ph
                axes.append(pc)
            out.append(PauliTerm(phase, "".join(axes)))
    return PauliSum(a.num_qubits, out)


def tensor_extend(s: PauliSum, left_pad: int, right_pad: int) -> PauliSum:
    """Pad every term with identities: new qubits 0..left_pad-1 below and
    ``right_pad`` qubits above the existing register."""
    if left_pad < 0 or right_pad < 0:
        raise ValueError("pads must be non-negative")
    terms = [
        PauliTerm(t.coefficient, "I" * left_pad + t.axes + "I" * right_pad)
        for t in s.terms
    ]
    return PauliSum(s.num_qubits + left_pad + right_pad, terms)


def matrix_of(s: PauliSum) -> np.ndarray:
    """Dense matrix with qubit 0 as the fastest-varying index bit."""
    if s.num_qubits > MATRIX_QUBIT_GUARD:
        raise CapacityError(
            f"{s.num_qubits} qubits exceeds the {MATRIX_QUBIT_GUARD}-qubit dense guard"
        )
    dim = 1 << s.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for t in s.terms:
        mats = [_PAULI_MATRICES[c] for c in reversed(t.axes)]
        out += t.coefficient * reduce(np.kron, mats, np.eye(1, dtype=complex))
    return out


def axes_masks(axes: str) -> tuple[int, int, int]:
    """(flip_mask, sign_mask, num_y) for kernel dispatch.

    P|b> = i^num_y * (-1)^popcount(b & sign_mask) |b ^ flip_mask>.
    """
    flip = sign = ny = 0
    for q, c in enumerate(axes):
        if c in "XY":
            flip |= 1 << q
        if c in "YZ":
            sign |= 1 << q
        if c == "Y":
            ny += 1
    return flip, sign, ny


def naive_cnot_upper_bound(s: PauliSum) -> int:
    """CNOT-ladder count: 2*(weight - 1) per non-identity term."""
    return sum(2 * (t.weight - 1) for t in s.terms if t.weight > 0)


# ---------------------------------------------------------------------------
# Level-to-qubit encodings
# ---------------------------------------------------------------------------


def num_code_qubits(d: int, scheme: str) -> int:
    if scheme == UNARY:
        return d
    if scheme in (STANDARD_BINARY, GRAY):
        if d < 2 or d & (d - 1):
            raise ValueError(f"{scheme} encoding requires d = 2^k, got {d}")
        return d.bit_length() - 1
    raise ValueError(f"unknown encoding scheme {scheme!r}")


def code_word(level: int, d: int, scheme: str) -> str:
    """MSB-first bit string encoding a level index."""
    if not 0 <= level < d:
        raise ValueError(f"level {level} outside [0, {d})")
    k = num_code_qubits(d, scheme)
    if scheme == STANDARD_BINARY:
        return format(level, f"0{k}b")
    if scheme == GRAY:
        return format(level ^ (level >> 1), f"0{k}b")
    bits = ["0"] * d
    bits[d - 1 - level] = "1"  # qubit `level` hot (qubit 0 is the rightmost char)
    return "".join(bits)


_KETBRA_RULES = {
    # (ket_bit, bra_bit) -> [(coeff, pauli), ...]
    ("0", "0"): ((0.5, "I"), (0.5, "Z")),
    ("1", "1"): ((0.5, "I"), (-0.5, "Z")),
    ("0", "1"): ((0.5, "X"), (0.5j, "Y")),
    ("1", "0"): ((0.5, "X"), (-0.5j, "Y")),
}


def encode_ketbra(row_bits: str, col_bits: str) -> PauliSum:
    """Pauli expansion of |row><col| for MSB-first bit strings."""
    if len(row_bits) != len(col_bits):
        raise ValueError("bit strings must have equal length")
    k = len(row_bits)
    terms = []
    # per-qubit factors, qubit q taken from character k-1-q
    factors = [_KETBRA_RULES[(row_bits[k - 1 - q], col_bits[k - 1 - q])] for q in range(k)]
    for combo in itertools.product(*factors):
        coeff = 1.0 + 0j
        axes = []
        for c, p in combo:
            coeff *= c
            axes.append(p)
        terms.append(PauliTerm(coeff, "".join(axes)))
    return PauliSum(k, terms)


def _encode_unary(op: np.ndarray, d: int) -> PauliSum:
    """One-hot lifting that reproduces the published single-Z / XX+YY forms.

    Only one-hot <-> one-hot matrix elements are physical; this lifting fixes
    the off-subspace freedom to |n><n| -> (I - Z_n)/2 and
    |m><n| + h.c. -> (XX + YY)-type ladders, which round-trips exactly on the
    one-hot subspace.
    """
    terms = []
    ident = "I" * d

    def single(q: int, p: str) -> str:
        return ident[:q] + p + ident[q + 1 :]

    def double(q1: int, p1: str, q2: int, p2: str) -> str:
        lo, hi = sorted([(q1, p1), (q2, p2)])
        return ident[: lo[0]] + lo[1] + ident[lo[0] + 1 : hi[0]] + hi[1] + ident[hi[0] + 1 :]

    for n in range(d):
        c = op[n, n]
        if abs(c) > PRUNE_TOL:
            terms.append(PauliTerm(0.5 * c, ident))
            terms.append(PauliTerm(-0.5 * c, single(n, "Z")))
    for m in range(d):
        for n in range(m + 1, d):
            a = op[m, n]
            if abs(a) <= PRUNE_TOL:
                continue
            re, im = a.real, a.imag
            if abs(re) > PRUNE_TOL:
                terms.append(PauliTerm(0.5 * re, double(m, "X", n, "X")))
                terms.append(PauliTerm(0.5 * re, double(m, "Y", n, "Y")))
            if abs(im) > PRUNE_TOL:
                terms.append(PauliTerm(-0.5 * im, double(m, "X", n, "Y")))
                terms.append(PauliTerm(0.5 * im, double(m, "Y", n, "X")))
    return PauliSum(d, terms)


def encode_operator(op: np.ndarray, d: int, scheme: str) -> PauliSum:
    """Encode a d-level operator into a Pauli sum under the chosen scheme."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match d={d}")
    if scheme == UNARY:
        return _encode_unary(op, d)
    k = num_code_qubits(d, scheme)
    words = [code_word(n, d, scheme) for n in range(d)]
    terms = []
    for m in range(d):
        for n in range(d):
            if abs(op[m, n]) > PRUNE_TOL:
                part = encode_ketbra(words[m], words[n])
                terms.extend(PauliTerm(op[m, n] * t.coefficient, t.axes) for t in part)
    return PauliSum(k, terms)


def encoded_level_index(level: int, d: int, scheme: str) -> int:
    """Basis-state index carrying an encoded level (the code word as an integer)."""
    return int(code_word(level, d, scheme), 2)


def encoding_permutation(d: int, scheme: str) -> np.ndarray:
    """Array p with p[level] = encoded basis index, for permuting dense operators."""
    return np.array([encoded_level_index(n, d, scheme) for n in range(d)], dtype=np.int64)


def format_term(t: PauliTerm) -> str:
    """One CLI output line: signed coefficient then axes."""
    return f"{t.coefficient.real:+.12e} {t.axes}"
