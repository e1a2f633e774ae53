"""Layered XX-entangler ansatz circuits and their gate/depth accounting.

A "unit layer" on a block of k qubits is RX+RZ on every qubit, an XX rotation
on every unordered pair, then RX+RZ on every qubit again; all angles are
independent parameters.  The hierarchical circuit stacks such blocks: two unit
layers per transmon block, then two per merged block of doubled width, up to a
single block spanning the full register.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .paulis import axes_masks


@dataclass(frozen=True)
class AnsatzGate:
    kind: str  # "rx" | "rz" | "xx"
    qubits: tuple[int, ...]
    slot: int


@dataclass(frozen=True)
class BlockLayer:
    """One unit layer of one block: qubit span plus its contiguous slot range."""

    stage: int
    block: int
    layer: int
    qubits: tuple[int, ...]
    slot_start: int
    slot_stop: int

    @property
    def slots(self) -> np.ndarray:
        return np.arange(self.slot_start, self.slot_stop, dtype=np.int64)


@dataclass(frozen=True)
class AnsatzProgram:
    num_qubits: int
    gates: tuple[AnsatzGate, ...]
    block_layers: tuple[BlockLayer, ...]
    num_parameters: int
    qubits_per_transmon: int = 4

    def parameter_groups(self) -> list[np.ndarray]:
        """Trainable groups in circuit order: all blocks of one (stage, layer)."""
        keys = sorted({(bl.stage, bl.layer) for bl in self.block_layers})
        return [
            np.concatenate(
                [bl.slots for bl in self.block_layers if (bl.stage, bl.layer) == key]
            )
            for key in keys
        ]

    def block_slots(self, stage: int, block: int) -> np.ndarray:
        """All parameter slots of one block across its unit layers (for seeding)."""
        parts = [
            bl.slots
            for bl in self.block_layers
            if bl.stage == stage and bl.block == block
        ]
        if not parts:
            raise ValueError(f"no block (stage={stage}, block={block})")
        return np.concatenate(parts)

    def num_xx(self) -> int:
        return sum(1 for g in self.gates if g.kind == "xx")


def _emit_unit_layer(gates: list[AnsatzGate], qubits: tuple[int, ...], slot: int) -> int:
    for q in qubits:
        gates.append(AnsatzGate("rx", (q,), slot))
        slot += 1
    for q in qubits:
        gates.append(AnsatzGate("rz", (q,), slot))
        slot += 1
    for q1, q2 in itertools.combinations(qubits, 2):
        gates.append(AnsatzGate("xx", (q1, q2), slot))
        slot += 1
    for q in qubits:
        gates.append(AnsatzGate("rx", (q,), slot))
        slot += 1
    for q in qubits:
        gates.append(AnsatzGate("rz", (q,), slot))
        slot += 1
    return slot


def build_block_ansatz(k_qubits: int, num_unit_layers: int) -> AnsatzProgram:
    """Single-block circuit: ``num_unit_layers`` unit layers on all k qubits."""
    if k_qubits < 2:
        raise ValueError("need at least two qubits")
    if num_unit_layers < 1:
        raise ValueError("need at least one unit layer")
    gates: list[AnsatzGate] = []
    layers: list[BlockLayer] = []
    qubits = tuple(range(k_qubits))
    slot = 0
    for layer in range(num_unit_layers):
        start = slot
        slot = _emit_unit_layer(gates, qubits, slot)
        layers.append(BlockLayer(0, 0, layer, qubits, start, slot))
    return AnsatzProgram(k_qubits, tuple(gates), tuple(layers), slot, k_qubits)


def build_hierarchical_ansatz(
    num_transmons: int, qubits_per_transmon: int = 4, layers_per_stage: int = 2
) -> AnsatzProgram:
    """Block-doubling circuit for M transmons (M a power of two).

    Stage s holds M / 2^s disjoint blocks of width qubits_per_transmon * 2^s,
    each repeated ``layers_per_stage`` times; the final stage is a single block
    over all data qubits.  Parameter slots are disjoint across blocks so
    stage-0 blocks can be seeded from uncoupled single-transmon optima.
    """
    m = num_transmons
    if m < 1 or (m & (m - 1)) != 0:
        raise ValueError(
            f"number of transmons must be a power of two, got {m}; "
            "simulate pads or split the chain instead"
        )
    total_qubits = m * qubits_per_transmon
    gates: list[AnsatzGate] = []
    layers: list[BlockLayer] = []
    slot = 0
    num_stages = m.bit_length()  # log2(m) + 1
    for stage in range(num_stages):
        width = qubits_per_transmon * (1 << stage)
        num_blocks = m >> stage
        for layer in range(layers_per_stage):
            for block in range(num_blocks):
                qubits = tuple(range(block * width, (block + 1) * width))
                start = slot
                slot = _emit_unit_layer(gates, qubits, slot)
                layers.append(BlockLayer(stage, block, layer, qubits, start, slot))
    return AnsatzProgram(total_qubits, tuple(gates), tuple(layers), slot, qubits_per_transmon)


class CompiledAnsatz:
    """Mask/slot arrays for the kernel backends."""

    __slots__ = ("num_qubits", "num_parameters", "flips", "signs", "nys", "slots")

    def __init__(self, program: AnsatzProgram):
        self.num_qubits = program.num_qubits
        self.num_parameters = program.num_parameters
        n = len(program.gates)
        self.flips = np.empty(n, dtype=np.int64)
        self.signs = np.empty(n, dtype=np.int64)
        self.nys = np.empty(n, dtype=np.int64)
        self.slots = np.empty(n, dtype=np.int64)
        for i, g in enumerate(program.gates):
            axes = ["I"] * program.num_qubits
            token = {"rx": "X", "rz": "Z", "xx": "X"}[g.kind]
            for q in g.qubits:
                axes[q] = token
            self.flips[i], self.signs[i], self.nys[i] = axes_masks("".join(axes))
            self.slots[i] = g.slot


def one_factorization(k: int) -> list[list[tuple[int, int]]]:
    """Round-robin partition of K_k's edges into perfect matchings.

    Even k gives k-1 rounds (the optimum); odd k gets a bye vertex and k rounds.
    """
    if k < 2:
        return []
    verts = list(range(k))
    bye = None
    if k % 2 == 1:
        verts.append(-1)
        bye = -1
    n = len(verts)
    rounds = []
    for r in range(n - 1):
        pairs = []
        a = verts[-1]
        b = verts[r % (n - 1)]
        if bye not in (a, b):
            pairs.append((min(a, b), max(a, b)))
        for i in range(1, n // 2):
            a = verts[(r + i) % (n - 1)]
            b = verts[(r - i) % (n - 1)]
            if bye not in (a, b):
                pairs.append((min(a, b), max(a, b)))
        rounds.append(sorted(pairs))
    return rounds


def _xx_rounds(width: int) -> int:
    return len(one_factorization(width))


def closed_form_counts(num_transmons: int) -> dict[str, int]:
    """Published scaling formulas; valid for power-of-two M with 4-qubit blocks."""
    m = num_transmons
    if m < 1 or (m & (m - 1)) != 0:
        raise ValueError(f"closed forms require a power-of-two transmon count, got {m}")
    log2m = m.bit_length() - 1
    n_xx = 32 * m * m - 4 * m * log2m - 20 * m
    depth_parallel = 16 * m + 6 * log2m - 2
    depth_sequential = (64 * m * m + 20) // 3 - 8 * m + 8 * log2m
    return {
        "n_xx": n_xx,
        "depth_parallel": depth_parallel,
        "depth_sequential": depth_sequential,
    }


def constructive_counts(program: AnsatzProgram) -> dict[str, int]:
    """Counts measured on a built circuit.

    Depths schedule the four single-qubit sub-layers sequentially and XX gates
    either via the 1-factorization rounds (parallel) or one at a time
    (sequential); blocks sharing a (stage, layer) are disjoint and run
    concurrently.
    """
    n_xx = program.num_xx()
    depth_parallel = 0
    depth_sequential = 0
    seen = sorted({(bl.stage, bl.layer) for bl in program.block_layers})
    for stage, layer in seen:
        widths = [
            len(bl.qubits)
            for bl in program.block_layers
            if (bl.stage, bl.layer) == (stage, layer)
        ]
        depth_parallel += 4 + max(_xx_rounds(w) for w in widths)
        depth_sequential += 4 + max(w * (w - 1) // 2 for w in widths)
    return {
        "n_xx": n_xx,
        "depth_parallel": depth_parallel,
        "depth_sequential": depth_sequential,
    }


def count_resources(num_transmons: int) -> dict[str, dict[str, int]]:
    """Closed-form and constructive counts side by side, with a match flag."""
    formulas = closed_form_counts(num_transmons)
    built = constructive_counts(build_hierarchical_ansatz(num_transmons))
    return {
        "formula": formulas,
        "constructed": built,
        "match": {key: formulas[key] == built[key] for key in formulas},
    }
