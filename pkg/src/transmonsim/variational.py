"""VQE and VQD with parameter-shift gradients and layer-wise training.

The optimizer is scipy's L-BFGS-B driven by exact parameter-shift gradients
(all gates are half-angle Pauli rotations, so the shift rule is exact).
Excited levels add exact-overlap penalties; the adaptive penalty mode follows
the gamma test: when the optimum pins at the penalty ceiling, the offset above
the highest known level is doubled and the level re-optimized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzProgram, CompiledAnsatz
from .backends import active_backend
from .paulis import PauliSum
from .statevector import CompiledObservable, RandomSeed, StateVector

_EMPTY_PREV = np.zeros((0, 1), dtype=np.complex128)
_EMPTY_BETA = np.zeros(0, dtype=np.float64)


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 3000
    gradient_tolerance: float = 1e-8
    parameter_tolerance: float = 1e-13  # relative objective-change stop (ftol)
    strategy: str = "layer-wise"  # "layer-wise" | "joint"
    restarts: int = 3
    seed: int = 1234
    layerwise_passes: int = 2
    init_scale: float = 0.1

    def __post_init__(self):
        if self.gradient_tolerance <= 0 or self.parameter_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.strategy not in ("layer-wise", "joint"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class DeflationConfig:
    """Overlap-penalty setup for excited levels.

    ``betas`` fixes the penalty weights outright; otherwise the adaptive mode
    starts the penalty ceiling ``gamma_offset_ghz`` above the highest level
    found so far and doubles the offset whenever the optimum pins at it.
    """

    num_levels: int
    betas: tuple[float, ...] | None = None
    gamma_offset_ghz: float = 1.0
    max_doublings: int = 10
    pin_tolerance_ghz: float = 1e-3

    def __post_init__(self):
        if self.num_levels < 1:
            raise ValueError("need at least one level")
        if self.betas is not None and any(b <= 0 for b in self.betas):
            raise ValueError("fixed betas must be positive")
        if self.gamma_offset_ghz <= 0:
            raise ValueError("gamma offset must be positive")


@dataclass
class VariationalResult:
    energies: list[float] = field(default_factory=list)
    parameters: list[np.ndarray] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    gradient_norms: list[float] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)
    overlap_matrix: np.ndarray | None = None
    states: list[StateVector] = field(default_factory=list)


class _Problem:
    """Penalized objective over a compiled circuit and observable."""

    def __init__(
        self,
        hamiltonian: PauliSum | CompiledObservable,
        ansatz: AnsatzProgram | CompiledAnsatz,
        prev_states: np.ndarray | None = None,
        betas: np.ndarray | None = None,
    ):
        self.obs = (
            hamiltonian
            if isinstance(hamiltonian, CompiledObservable)
            else CompiledObservable(hamiltonian)
        )
        self.circ = ansatz if isinstance(ansatz, CompiledAnsatz) else CompiledAnsatz(ansatz)
        if self.obs.num_qubits != self.circ.num_qubits:
            raise ValueError("hamiltonian and ansatz widths differ")
        dim = 1 << self.circ.num_qubits
        if prev_states is None or len(prev_states) == 0:
            self.prev = np.zeros((0, dim), dtype=np.complex128)
            self.betas = _EMPTY_BETA
        else:
            self.prev = np.ascontiguousarray(prev_states, dtype=np.complex128)
            self.betas = np.ascontiguousarray(betas, dtype=np.float64)
        self._all = np.arange(self.circ.num_parameters, dtype=np.int64)

    def value_and_grad(self, params: np.ndarray, indices: np.ndarray | None = None):
        idx = self._all if indices is None else indices
        return active_backend().value_and_grad(
            np.ascontiguousarray(params, dtype=np.float64),
            self.circ.flips, self.circ.signs, self.circ.nys, self.circ.slots,
            self.obs.coeffs, self.obs.flips, self.obs.signs, self.obs.nys,
            self.prev, self.betas, self.circ.num_qubits, idx,
        )

    def state(self, params: np.ndarray) -> StateVector:
        return prepare_state(self.circ, params)


def prepare_state(
    ansatz: AnsatzProgram | CompiledAnsatz,
    params: np.ndarray,
    reference: StateVector | None = None,
) -> StateVector:
    """Run the ansatz from the reference state (default |0...0>)."""
    circ = ansatz if isinstance(ansatz, CompiledAnsatz) else CompiledAnsatz(ansatz)
    state = StateVector(circ.num_qubits) if reference is None else reference.copy()
    active_backend().run_circuit(
        state.amplitudes, circ.flips, circ.signs, circ.nys, circ.slots,
        np.ascontiguousarray(params, dtype=np.float64),
    )
    return state


def vqe_objective(
    params: np.ndarray,
    hamiltonian: PauliSum | CompiledObservable,
    ansatz: AnsatzProgram | CompiledAnsatz,
    reference: StateVector | None = None,
) -> tuple[float, np.ndarray]:
    """Energy of the prepared state and its exact parameter-shift gradient."""
    if reference is None:
        problem = _Problem(hamiltonian, ansatz)
        return problem.value_and_grad(params)
    obs = (
        hamiltonian
        if isinstance(hamiltonian, CompiledObservable)
        else CompiledObservable(hamiltonian)
    )
    circ = ansatz if isinstance(ansatz, CompiledAnsatz) else CompiledAnsatz(ansatz)

    def energy(p):
        st = prepare_state(circ, p, reference)
        return active_backend().expectation(
            st.amplitudes, obs.coeffs, obs.flips, obs.signs, obs.nys
        )

    value = energy(params)
    grad = np.empty(len(params))
    work = np.array(params, dtype=float)
    for j in range(len(params)):
        orig = work[j]
        work[j] = orig + 0.5 * np.pi
        fp = energy(work)
        work[j] = orig - 0.5 * np.pi
        fm = energy(work)
        work[j] = orig
        grad[j] = 0.5 * (fp - fm)
    return value, grad


def _lbfgs(problem: _Problem, params: np.ndarray, indices: np.ndarray | None,
           config: OptimizerConfig):
    """Minimize over params[indices] (all parameters when indices is None)."""
    full = params.copy()

    if indices is None:
        fun = lambda x: problem.value_and_grad(x)
    else:
        def fun(x):
            full[indices] = x
            return problem.value_and_grad(full, indices)

    x0 = full if indices is None else full[indices]
    res = minimize(
        fun, x0, jac=True, method="L-BFGS-B",
        options={
            "maxiter": config.max_iterations,
            "gtol": config.gradient_tolerance,
            "ftol": config.parameter_tolerance,
        },
    )
    if indices is None:
        full = res.x
    else:
        full[indices] = res.x
    return full, float(res.fun), int(res.nit), res


def _optimize(problem: _Problem, params0: np.ndarray, program: AnsatzProgram | None,
              config: OptimizerConfig):
    """One optimization run (joint or layer-wise + joint refinement)."""
    params = params0.copy()
    total_iters = 0
    if config.strategy == "layer-wise" and program is not None:
        groups = program.parameter_groups()
        for _ in range(config.layerwise_passes):
            for group in groups:
                params, _, nit, _ = _lbfgs(problem, params, group, config)
                total_iters += nit
    params, value, nit, res = _lbfgs(problem, params, None, config)
    total_iters += nit
    grad_norm = float(np.max(np.abs(res.jac))) if np.size(res.jac) else 0.0
    converged = bool(res.success) and grad_norm <= max(config.gradient_tolerance * 10, 1e-6)
    return params, value, total_iters, grad_norm, converged, str(res.message)


def _restart_params(num_parameters: int, config: OptimizerConfig, stream: int) -> np.ndarray:
    rng = RandomSeed(config.seed, stream).generator()
    return rng.uniform(-config.init_scale, config.init_scale, size=num_parameters)


def _best_of_restarts(problem: _Problem, program: AnsatzProgram | None,
                      config: OptimizerConfig, seeds: list[np.ndarray],
                      stream_base: int):
    """Run every seed plus random restarts; ties (<1e-12) keep the earliest."""
    num_params = problem.circ.num_parameters
    starts = list(seeds)
    while len(starts) < max(config.restarts, len(seeds)):
        starts.append(_restart_params(num_params, config, stream_base + len(starts)))
    best = None
    iters = 0
    for start in starts:
        out = _optimize(problem, start, program, config)
        iters += out[2]
        if best is None or out[1] < best[1] - 1e-12:
            best = out
    params, value, _, grad_norm, converged, message = best
    return params, value, iters, grad_norm, converged, message


def run_vqe(
    hamiltonian: PauliSum,
    program: AnsatzProgram,
    config: OptimizerConfig = OptimizerConfig(),
    seed_params: np.ndarray | None = None,
) -> VariationalResult:
    """Ground-level minimization; returns a one-level VariationalResult."""
    if not hamiltonian.is_hermitian():
        raise ValueError("hamiltonian must be Hermitian")
    problem = _Problem(hamiltonian, program)
    seeds = [np.asarray(seed_params, dtype=float)] if seed_params is not None else []
    params, value, iters, gnorm, conv, msg = _best_of_restarts(
        problem, program, config, seeds, stream_base=0
    )
    state = problem.state(params)
    result = VariationalResult()
    result.energies.append(value)
    result.parameters.append(params)
    result.iterations.append(iters)
    result.gradient_norms.append(gnorm)
    result.converged.append(conv)
    result.messages.append(msg)
    result.states.append(state)
    result.overlap_matrix = np.ones((1, 1))
    return result


def run_vqd(
    hamiltonian: PauliSum,
    program: AnsatzProgram,
    deflation: DeflationConfig,
    config: OptimizerConfig = OptimizerConfig(),
    seed_params_per_level: list[np.ndarray | None] | None = None,
) -> VariationalResult:
    """Deflated minimization of the lowest ``deflation.num_levels`` levels."""
    if not hamiltonian.is_hermitian():
        raise ValueError("hamiltonian must be Hermitian")
    obs = CompiledObservable(hamiltonian)
    circ = CompiledAnsatz(program)
    result = VariationalResult()
    prev_states: list[np.ndarray] = []

    for level in range(deflation.num_levels):
        seed = None
        if seed_params_per_level is not None and level < len(seed_params_per_level):
            seed = seed_params_per_level[level]
        if seed is None:
            seeds = []
        elif isinstance(seed, (list, tuple)):
            seeds = [np.asarray(s, dtype=float) for s in seed]
        else:
            seeds = [np.asarray(seed, dtype=float)]
        stream_base = 1000 * level

        if level == 0:
            problem = _Problem(obs, circ)
            params, value, iters, gnorm, conv, msg = _best_of_restarts(
                problem, program, config, seeds, stream_base
            )
        elif deflation.betas is not None:
            betas = np.array(
                [
                    deflation.betas[i if i < len(deflation.betas) else -1]
                    for i in range(level)
                ]
            )
            problem = _Problem(obs, circ, np.array(prev_states), betas)
            params, value, iters, gnorm, conv, msg = _best_of_restarts(
                problem, program, config, seeds, stream_base
            )
        else:
            # adaptive ceiling: gamma above the highest level found so far
            e_top = max(result.energies)
            offset = deflation.gamma_offset_ghz
            iters = 0
            for doubling in range(deflation.max_doublings + 1):
                gamma = e_top + offset
                betas = gamma - np.array(result.energies)
                problem = _Problem(obs, circ, np.array(prev_states), betas)
                params, value, it, gnorm, conv, msg = _best_of_restarts(
                    problem, program, config, seeds, stream_base + 100 * doubling
                )
                iters += it
                if value < gamma - deflation.pin_tolerance_ghz:
                    break
                offset *= 2.0
            else:
                raise RuntimeError(
                    f"deflation stalled at level {level}: objective pinned at the "
                    f"penalty ceiling after {deflation.max_doublings} doublings "
                    f"(last gamma {gamma:.6f} GHz, objective {value:.6f} GHz)"
                )

        state = prepare_state(circ, params)
        energy = active_backend().expectation(
            state.amplitudes, obs.coeffs, obs.flips, obs.signs, obs.nys
        )
        result.energies.append(float(energy))
        result.parameters.append(params)
        result.iterations.append(iters)
        result.gradient_norms.append(gnorm)
        result.converged.append(conv)
        result.messages.append(msg)
        result.states.append(state)
        prev_states.append(state.amplitudes)

    n = len(result.states)
    overlaps = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            overlaps[i, j] = (
                abs(np.vdot(result.states[i].amplitudes, result.states[j].amplitudes)) ** 2
            )
    result.overlap_matrix = overlaps
    return result
