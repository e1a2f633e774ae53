"""Transmon sub-module design toolkit.

Builds truncated charge-basis Hamiltonians for transmon chains, encodes them
into multi-qubit Pauli operators, computes spectra variationally (VQE/VQD) on
an internal statevector engine, and simulates hardware gates via first-order
product formulas with exact-propagation benchmarks.
"""

__version__ = "0.1.0"

from .device import (
    ChainSpec,
    SpectrumResult,
    TransmonSpec,
    build_chain_hamiltonian,
    build_single_hamiltonian,
    build_two_hamiltonian,
    capacitance_matrix,
    charging_energy,
    cosine_phase_operator,
    exact_spectrum,
    label_computational_states,
    number_operator,
    product_basis,
)
from .paulis import (
    GRAY,
    SCHEMES,
    STANDARD_BINARY,
    UNARY,
    PauliSum,
    PauliTerm,
    code_word,
    encode_ketbra,
    encode_operator,
    matrix_of,
    multiply,
    naive_cnot_upper_bound,
    tensor_extend,
)
from .statevector import (
    GateOp,
    RandomSeed,
    StateVector,
    apply_gate,
    expectation,
    haar_random_in_subspace,
    inner_product,
)
from .ansatz import (
    AnsatzProgram,
    build_block_ansatz,
    build_hierarchical_ansatz,
    closed_form_counts,
    constructive_counts,
    count_resources,
)
from .variational import (
    DeflationConfig,
    OptimizerConfig,
    VariationalResult,
    run_vqd,
    run_vqe,
    vqe_objective,
)
from .pulses import (
    DragSpec,
    PulseSchedule,
    build_drag_schedule,
    cphase_schedule,
    drag_envelope,
    drag_spec_from_transmon,
)
from .dynamics import (
    FidelityReport,
    ScalingFit,
    average_gate_fidelity,
    exact_evolve,
    exact_propagator,
    find_avoided_crossing,
    run_cphase_protocol,
    trotter_error,
    trotter_evolve,
    trotter_scan,
)
