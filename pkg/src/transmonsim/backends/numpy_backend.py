"""Pure-numpy reference kernels for the statevector engine.

Same contracts as the numba backend; selected with TRANSMONSIM_BACKEND=numpy.
Masks follow transmonsim.paulis.axes_masks: a Pauli string acts on a basis
state as P|b> = i^ny * (-1)^parity(b & sign) |b ^ flip>.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def _signs(dim: int, sign_mask: int) -> np.ndarray:
    """(-1)^parity(b & sign_mask) for all basis indices b."""
    return 1.0 - 2.0 * _parity(np.arange(dim, dtype=np.int64) & np.int64(sign_mask))


def _pair_indices(dim: int, flip: int) -> tuple[np.ndarray, np.ndarray]:
    """Each flipped pair exactly once: insert a zero at the top flipped bit."""
    pivot = flip.bit_length() - 1
    low_mask = (1 << pivot) - 1
    g = np.arange(dim >> 1, dtype=np.int64)
    i = ((g >> pivot) << (pivot + 1)) | (g & low_mask)
    return i, i ^ np.int64(flip)


def apply_pauli_rotation(
    amps: np.ndarray, flip: int, sign: int, ny: int, theta: float
) -> None:
    """In-place exp(-i*theta*P/2) for the Pauli string given by the masks."""
    dim = amps.shape[0]
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    if flip == 0:
        amps *= c - 1j * s * _signs(dim, sign)
        return
    i_idx, j_idx = _pair_indices(dim, flip)
    iny = 1j**ny
    # phase(b): P|b> = phase(b) |b ^ flip>
    ph_i = iny * (1.0 - 2.0 * _parity(i_idx & np.int64(sign)))
    ph_j = iny * (1.0 - 2.0 * _parity(j_idx & np.int64(sign)))
    a = amps[i_idx]
    b = amps[j_idx]
    amps[i_idx] = c * a - 1j * s * ph_j * b
    amps[j_idx] = c * b - 1j * s * ph_i * a


def run_circuit(
    amps: np.ndarray,
    flips: np.ndarray,
    signs: np.ndarray,
    nys: np.ndarray,
    slots: np.ndarray,
    params: np.ndarray,
) -> None:
    """Apply a compiled gate list in order; gate g rotates by params[slots[g]]."""
    for g in range(flips.shape[0]):
        apply_pauli_rotation(
            amps, int(flips[g]), int(signs[g]), int(nys[g]), float(params[slots[g]])
        )


def expectation(
    amps: np.ndarray,
    coeffs: np.ndarray,
    flips: np.ndarray,
    signs: np.ndarray,
    nys: np.ndarray,
) -> float:
    """Sum_i c_i <psi|P_i|psi> for a Hermitian compiled observable."""
    dim = amps.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    total = 0.0
    conj = amps.conj()
    for t in range(coeffs.shape[0]):
        ph = (1j ** int(nys[t])) * _signs(dim, int(signs[t]))
        moved = ph * amps
        if flips[t]:
            moved = moved[idx ^ np.int64(flips[t])]
            # (P psi)[b] = phase(b^flip) psi[b^flip]
        total += coeffs[t] * np.real(np.sum(conj * moved))
    return float(total)


def trotter_run(
    amps: np.ndarray,
    flips: np.ndarray,
    signs: np.ndarray,
    nys: np.ndarray,
    thetas: np.ndarray,
) -> None:
    """First-order product formula: thetas[k, t] rotates term t at step k."""
    for k in range(thetas.shape[0]):
        for t in range(flips.shape[0]):
            apply_pauli_rotation(
                amps, int(flips[t]), int(signs[t]), int(nys[t]), float(thetas[k, t])
            )


def trotter_run_batch(
    states: np.ndarray,
    flips: np.ndarray,
    signs: np.ndarray,
    nys: np.ndarray,
    thetas: np.ndarray,
) -> None:
    for b in range(states.shape[0]):
        trotter_run(states[b], flips, signs, nys, thetas)


def value_and_grad(
    params: np.ndarray,
    g_flips: np.ndarray,
    g_signs: np.ndarray,
    g_nys: np.ndarray,
    g_slots: np.ndarray,
    obs_coeffs: np.ndarray,
    obs_flips: np.ndarray,
    obs_signs: np.ndarray,
    obs_nys: np.ndarray,
    prev_states: np.ndarray,
    betas: np.ndarray,
    num_qubits: int,
    grad_indices: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Penalized expectation and its parameter-shift gradient.

    Objective: <psi|H|psi> + sum_i betas[i] |<prev_i|psi>|^2 with
    |psi> = circuit(params)|0...0>; the gradient covers params[grad_indices].
    """

    def objective(p: np.ndarray) -> float:
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        run_circuit(amps, g_flips, g_signs, g_nys, g_slots, p)
        val = expectation(amps, obs_coeffs, obs_flips, obs_signs, obs_nys)
        for i in range(prev_states.shape[0]):
            val += betas[i] * abs(np.vdot(prev_states[i], amps)) ** 2
        return val

    value = objective(params)
    grad = np.empty(grad_indices.shape[0])
    work = params.copy()
    for out, p in enumerate(grad_indices):
        orig = work[p]
        work[p] = orig + 0.5 * np.pi
        fp = objective(work)
        work[p] = orig - 0.5 * np.pi
        fm = objective(work)
        work[p] = orig
        grad[out] = 0.5 * (fp - fm)
    return value, grad
