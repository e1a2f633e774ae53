"""Truncated charge-basis models of single transmons and capacitively coupled chains.

All Hamiltonians are stored as H/h in GHz, with times in ns elsewhere in the
package; evolution phases are therefore 2*pi*E*t.  The charge basis keeps
``d`` states per transmon with the symmetric offset n - d/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import ELECTRON_CHARGE, PLANCK_H
from .errors import CapacityError, ModelError

DENSE_DIM_GUARD = 1 << 20

# 2 e^2 / h in GHz for a capacitance given in fF; equals 4 E_C for C = C_total
_CHARGING_PREFACTOR_GHZ_FF = ELECTRON_CHARGE**2 / PLANCK_H / 1e-15 / 1e9 * 2.0


def charging_energy(total_capacitance_ff: float) -> float:
    """Charging energy E_C/h = e^2 / (2 C h) in GHz for a capacitance in fF."""
    if total_capacitance_ff <= 0:
        raise ValueError(f"capacitance must be positive, got {total_capacitance_ff}")
    return _CHARGING_PREFACTOR_GHZ_FF / (4.0 * total_capacitance_ff)


def _check_power_of_two(d: int) -> None:
    if d < 2 or (d & (d - 1)) != 0:
        raise ValueError(f"truncation dimension must be a power of two >= 2, got {d}")


def number_operator(d: int) -> np.ndarray:
    """Cooper-pair number operator, diag(n - d/2) for n = 0..d-1."""
    _check_power_of_two(d)
    return np.diag(np.arange(d) - d / 2.0)


def cosine_phase_operator(d: int) -> np.ndarray:
    """Cosine of the junction phase: 1/2 on both first off-diagonals."""
    _check_power_of_two(d)
    off = 0.5 * np.ones(d - 1)
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class TransmonSpec:
    """SQUID transmon: per-junction Josephson energy (GHz), total shunt+junction
    capacitance (fF), and normalized external flux f = Phi_ext / Phi_0."""

    josephson_energy_ghz: float
    total_capacitance_ff: float
    flux: float = 0.0

    def __post_init__(self):
        if self.josephson_energy_ghz <= 0:
            raise ValueError("josephson_energy_ghz must be positive")
        if self.total_capacitance_ff <= 0:
            raise ValueError("total_capacitance_ff must be positive")

    @property
    def charging_energy_ghz(self) -> float:
        return charging_energy(self.total_capacitance_ff)

    @property
    def effective_josephson_ghz(self) -> float:
        """Flux-tuned SQUID energy 2 E_J |cos(2 pi f)|."""
        return 2.0 * self.josephson_energy_ghz * abs(np.cos(2.0 * np.pi * self.flux))

    def with_flux(self, flux: float) -> "TransmonSpec":
        return TransmonSpec(self.josephson_energy_ghz, self.total_capacitance_ff, flux)


@dataclass(frozen=True)
class ChainSpec:
    """Chain of capacitively coupled transmons.

    ``coupling_capacitances_ff`` holds the nearest-neighbor couplers (length
    M-1); ``extra_capacitances_ff`` optionally adds sparse (i, j, C_ff) entries
    for spurious non-nearest-neighbor coupling.
    """

    transmons: tuple[TransmonSpec, ...]
    coupling_capacitances_ff: tuple[float, ...] = ()
    extra_capacitances_ff: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "transmons", tuple(self.transmons))
        object.__setattr__(
            self, "coupling_capacitances_ff", tuple(self.coupling_capacitances_ff)
        )
        object.__setattr__(
            self,
            "extra_capacitances_ff",
            tuple(tuple(x) for x in self.extra_capacitances_ff),
        )
        m = len(self.transmons)
        if m < 1:
            raise ValueError("need at least one transmon")
        if len(self.coupling_capacitances_ff) != max(m - 1, 0):
            raise ValueError(
                f"expected {m - 1} nearest-neighbor couplings, "
                f"got {len(self.coupling_capacitances_ff)}"
            )
        if any(c < 0 for c in self.coupling_capacitances_ff):
            raise ValueError("coupling capacitances must be non-negative")
        for i, j, c in self.extra_capacitances_ff:
            if not (0 <= i < m and 0 <= j < m and i != j):
                raise ValueError(f"bad extra coupling indices ({i}, {j})")
            if c < 0:
                raise ValueError("extra capacitances must be non-negative")

    @property
    def num_transmons(self) -> int:
        return len(self.transmons)

    def with_flux(self, index: int, flux: float) -> "ChainSpec":
        ts = list(self.transmons)
        ts[index] = ts[index].with_flux(flux)
        return ChainSpec(tuple(ts), self.coupling_capacitances_ff, self.extra_capacitances_ff)


def capacitance_matrix(spec: ChainSpec) -> np.ndarray:
    """Maxwell capacitance matrix in fF: node-sum capacitances on the diagonal,
    minus the inter-node capacitance off the diagonal."""
    m = spec.num_transmons
    cmat = np.zeros((m, m))
    for i, t in enumerate(spec.transmons):
        cmat[i, i] += t.total_capacitance_ff
    pairs = [(i, i + 1, c) for i, c in enumerate(spec.coupling_capacitances_ff)]
    pairs += [(i, j, c) for i, j, c in spec.extra_capacitances_ff]
    for i, j, c in pairs:
        cmat[i, i] += c
        cmat[j, j] += c
        cmat[i, j] -= c
        cmat[j, i] -= c
    eigvals = np.linalg.eigvalsh(cmat)
    if eigvals[0] <= 0:
        raise ModelError(
            f"capacitance matrix is not positive definite (eigenvalue {eigvals[0]:g} fF)"
        )
    return cmat


def build_single_hamiltonian(spec: TransmonSpec, d: int) -> np.ndarray:
    """Single-transmon H/h = 4 E_C N^2 - 2 E_J |cos(2 pi f)| cos(phi), GHz."""
    n = number_operator(d)
    return 4.0 * spec.charging_energy_ghz * (n @ n) - (
        spec.effective_josephson_ghz * cosine_phase_operator(d)
    )


def build_two_hamiltonian(
    spec1: TransmonSpec, spec2: TransmonSpec, coupling_capacitance_ff: float, d_each: int
) -> np.ndarray:
    """Closed-form two-transmon Hamiltonian on the d_each^2 product space.

    Valid only for equal total capacitances, where the charge coupling reduces
    to xi = C_c / (C_c + C_total); operator ordering is (transmon 1) x (transmon 2).
    """
    if spec1.total_capacitance_ff != spec2.total_capacitance_ff:
        raise ValueError(
            "closed form requires equal total capacitances; "
            "use build_chain_hamiltonian for asymmetric devices"
        )
    if coupling_capacitance_ff < 0:
        raise ValueError("coupling capacitance must be non-negative")
    ec = spec1.charging_energy_ghz
    xi = coupling_capacitance_ff / (coupling_capacitance_ff + spec1.total_capacitance_ff)
    n = number_operator(d_each)
    cos = cosine_phase_operator(d_each)
    eye = np.eye(d_each)
    n1 = np.kron(n, eye)
    n2 = np.kron(eye, n)
    h = 4.0 * ec / (1.0 + xi) * (n1 @ n1 + n2 @ n2 + 2.0 * xi * (n1 @ n2))
    h -= spec1.effective_josephson_ghz * np.kron(cos, eye)
    h -= spec2.effective_josephson_ghz * np.kron(eye, cos)
    return h


def build_chain_hamiltonian(spec: ChainSpec, d_each: int) -> np.ndarray:
    """M-transmon chain Hamiltonian from the inverse capacitance matrix.

    H/h = 2e^2/h sum_ij (C^-1)_ij N_i N_j - sum_i 2 E_Ji |cos(2 pi f_i)| cos(phi_i),
    assembled on the dense tensor-product space (transmon 1 owns the slowest index).
    """
    _check_power_of_two(d_each)
    m = spec.num_transmons
    dim = d_each**m
    if dim > DENSE_DIM_GUARD:
        raise CapacityError(
            f"dense dimension {d_each}^{m} exceeds the {DENSE_DIM_GUARD} guard"
        )
    cinv = np.linalg.inv(capacitance_matrix(spec))
    n = number_operator(d_each)
    cos = cosine_phase_operator(d_each)

    def lift(op: np.ndarray, site: int) -> np.ndarray:
        out = np.eye(1)
        for k in range(m):
            out = np.kron(out, op if k == site else np.eye(d_each))
        return out

    n_site = [lift(n, i) for i in range(m)]
    h = np.zeros((dim, dim))
    for i in range(m):
        for j in range(m):
            h += (_CHARGING_PREFACTOR_GHZ_FF * cinv[i, j]) * (n_site[i] @ n_site[j])
    for i, t in enumerate(spec.transmons):
        h -= t.effective_josephson_ghz * lift(cos, i)
    return h


@dataclass
class SpectrumResult:
    """Lowest eigenpairs, ascending, with optional product-state labels."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns
    labels: list[str] | None = None
    label_overlaps: np.ndarray | None = None
    ambiguous: list[bool] = field(default_factory=list)


def exact_spectrum(h: np.ndarray, k_levels: int) -> SpectrumResult:
    """Dense Hermitian diagonalization, returning the k lowest eigenpairs."""
    dim = h.shape[0]
    if k_levels > dim:
        raise ValueError(f"requested {k_levels} levels from a {dim}-dim operator")
    herm_defect = np.linalg.norm(h - h.conj().T) / max(np.linalg.norm(h), 1e-300)
    if herm_defect > 1e-12:
        raise ValueError(f"operator is not Hermitian (relative defect {herm_defect:.2e})")
    w, v = np.linalg.eigh(h)
    return SpectrumResult(w[:k_levels].copy(), v[:, :k_levels].copy())


def product_basis(
    specs: list[TransmonSpec], d_each: int, levels_per_site: int
) -> tuple[list[str], np.ndarray]:
    """Uncoupled product eigenstates for labeling a coupled spectrum.

    Returns (labels, columns) where label "mn..." lists per-transmon excitation
    numbers and the columns live on the same tensor-product space as
    ``build_chain_hamiltonian``.
    """
    single = [exact_spectrum(build_single_hamiltonian(s, d_each), levels_per_site) for s in specs]
    labels: list[str] = []
    cols: list[np.ndarray] = []
    m = len(specs)
    for flat in range(levels_per_site**m):
        digits = []
        rest = flat
        for site in range(m):
            p = levels_per_site ** (m - 1 - site)
            digits.append(rest // p)
            rest %= p
        vec = np.ones(1)
        for site, lev in enumerate(digits):
            vec = np.kron(vec, single[site].eigenvectors[:, lev])
        labels.append("".join(str(x) for x in digits))
        cols.append(vec)
    return labels, np.column_stack(cols)


def label_computational_states(
    coupled: SpectrumResult,
    product_labels: list[str],
    product_vectors: np.ndarray,
    ambiguity_tol: float = 1e-6,
) -> SpectrumResult:
    """Attach the maximal-overlap product label to each coupled eigenvector.

    When the two best candidates overlap within ``ambiguity_tol`` the level is
    flagged ambiguous and both labels are reported joined by "|".
    """
    overlaps = np.abs(product_vectors.conj().T @ coupled.eigenvectors) ** 2
    labels = []
    best_overlaps = []
    ambiguous = []
    for lev in range(coupled.eigenvectors.shape[1]):
        order = np.argsort(overlaps[:, lev])[::-1]
        first, second = order[0], order[1] if len(order) > 1 else order[0]
        tie = (
            len(order) > 1
            and overlaps[first, lev] - overlaps[second, lev] < ambiguity_tol
        )
        if tie:
            labels.append(f"{product_labels[first]}|{product_labels[second]}")
        else:
            labels.append(product_labels[first])
        best_overlaps.append(overlaps[first, lev])
        ambiguous.append(bool(tie))
    coupled.labels = labels
    coupled.label_overlaps = np.asarray(best_overlaps)
    coupled.ambiguous = ambiguous
    return coupled
