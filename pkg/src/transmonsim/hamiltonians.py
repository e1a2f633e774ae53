"""Qubit-register encodings of device Hamiltonians.

Each transmon's d levels map onto their own code-qubit group; transmon 0 (the
first in the chain) occupies the most significant qubits, matching the dense
tensor-product ordering of build_chain_hamiltonian.
"""

from __future__ import annotations

import numpy as np

from .device import (
    ChainSpec,
    TransmonSpec,
    capacitance_matrix,
    cosine_phase_operator,
    number_operator,
    _CHARGING_PREFACTOR_GHZ_FF,
)
from .paulis import (
    GRAY,
    PauliSum,
    add,
    encode_operator,
    encoding_permutation,
    multiply,
    num_code_qubits,
    scale,
    tensor_extend,
)


def encode_single_hamiltonian(spec: TransmonSpec, d: int, scheme: str = GRAY) -> PauliSum:
    """Pauli-sum form of the single-transmon Hamiltonian (GHz coefficients)."""
    n = encode_operator(number_operator(d), d, scheme)
    cos = encode_operator(cosine_phase_operator(d), d, scheme)
    h = scale(multiply(n, n), 4.0 * spec.charging_energy_ghz)
    return add(h, scale(cos, -spec.effective_josephson_ghz))


def _extend_to_site(s: PauliSum, site: int, num_sites: int, k: int) -> PauliSum:
    """Place a single-transmon sum on the qubit group of the given site."""
    return tensor_extend(s, (num_sites - 1 - site) * k, site * k)


def encode_chain_hamiltonian(spec: ChainSpec, d_each: int, scheme: str = GRAY) -> PauliSum:
    """Pauli-sum form of the chain Hamiltonian on m*k code qubits."""
    m = spec.num_transmons
    k = num_code_qubits(d_each, scheme)
    cinv = np.linalg.inv(capacitance_matrix(spec))
    n_enc = encode_operator(number_operator(d_each), d_each, scheme)
    cos_enc = encode_operator(cosine_phase_operator(d_each), d_each, scheme)
    n2_enc = multiply(n_enc, n_enc)
    total = PauliSum(m * k)
    for i in range(m):
        total = add(
            total,
            scale(
                _extend_to_site(n2_enc, i, m, k),
                _CHARGING_PREFACTOR_GHZ_FF * cinv[i, i],
            ),
        )
        for j in range(i + 1, m):
            coupling = _CHARGING_PREFACTOR_GHZ_FF * (cinv[i, j] + cinv[j, i])
            if abs(coupling) < 1e-300:
                continue
            cross = multiply(
                _extend_to_site(n_enc, i, m, k), _extend_to_site(n_enc, j, m, k)
            )
            total = add(total, scale(cross, coupling))
    for i, t in enumerate(spec.transmons):
        total = add(
            total,
            scale(_extend_to_site(cos_enc, i, m, k), -t.effective_josephson_ghz),
        )
    return total


def chain_encoding_permutation(d_each: int, num_sites: int, scheme: str = GRAY) -> np.ndarray:
    """p[flat_level_index] = encoded basis index, for permuting dense operators.

    Only bijective schemes (standard binary, Gray) are supported; the flat
    index orders site 0 as the most significant digit.
    """
    k = num_code_qubits(d_each, scheme)
    if (1 << k) != d_each:
        raise ValueError("permutation requires a bijective (power-of-two) encoding")
    p1 = encoding_permutation(d_each, scheme)
    out = np.empty(d_each**num_sites, dtype=np.int64)
    for flat in range(d_each**num_sites):
        rest = flat
        enc = 0
        for site in range(num_sites):
            power = d_each ** (num_sites - 1 - site)
            lev = rest // power
            rest %= power
            enc |= int(p1[lev]) << ((num_sites - 1 - site) * k)
        out[flat] = enc
    return out


def permute_to_encoded(matrix: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Re-index a level-space operator into the encoded qubit basis."""
    out = np.zeros_like(matrix)
    out[np.ix_(perm, perm)] = matrix
    return out


def permute_vector_to_encoded(vec: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vec)
    out[perm] = vec
    return out
