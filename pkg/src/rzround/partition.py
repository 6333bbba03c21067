"""Split wide circuits into small blocks, round each block, and stitch them back."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import MAX_DENSE_QUBITS, Circuit, Gate, build_unitary
from .cost import CLIFFORD_T, AngleSet, distance
from .optimize import DEFAULT_STARTS
from .tcount import DEFAULT_THRESHOLD, RoundingOutcome, ThresholdConfig, t_count, two_phase_round


@dataclass(frozen=True)
class PartitionBlock:
    """Contiguous run of parent gates touching at most ``block_size`` qubits.

    ``qubits`` maps local qubit ``i`` to parent qubit ``qubits[i]``;
    ``param_map`` does the same for Rz slots.
    """

    qubits: tuple[int, ...]
    gate_indices: tuple[int, ...]
    circuit: Circuit
    param_map: tuple[int, ...]
    params: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class PartitionPlan:
    block_size: int = 3
    threshold: float = DEFAULT_THRESHOLD
    mode: str = "direct"
    budget_policy: str = "uniform"
    num_starts: int = DEFAULT_STARTS
    angle_set: AngleSet = CLIFFORD_T
    penalty_factor: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if not 2 <= self.block_size <= MAX_DENSE_QUBITS:
            raise ValueError(f"block_size must be in 2..{MAX_DENSE_QUBITS}")
        if self.budget_policy not in ("uniform", "fixed"):
            raise ValueError(f"unknown budget policy {self.budget_policy!r}")

    def block_threshold(self, n_blocks: int) -> ThresholdConfig:
        """Per-block threshold; ``uniform`` splits the global one evenly."""
        t = self.threshold / max(n_blocks, 1) if self.budget_policy == "uniform" else self.threshold
        return ThresholdConfig(t, self.mode)


def _make_block(circuit: Circuit, params: np.ndarray, indices: list[int]) -> PartitionBlock:
    qubits = sorted({q for i in indices for q in circuit.gates[i].qubits})
    local_q = {q: j for j, q in enumerate(qubits)}
    gates, pmap = [], []
    for i in indices:
        g = circuit.gates[i]
        lq = tuple(local_q[q] for q in g.qubits)
        if g.param is None:
            gates.append(Gate(g.name, lq))
        else:
            gates.append(Gate("rz", lq, len(pmap)))
            pmap.append(g.param)
    local = Circuit(len(qubits), gates)
    return PartitionBlock(tuple(qubits), tuple(indices), local, tuple(pmap), params[pmap] if pmap else np.zeros(0))


def partition(circuit: Circuit, block_size: int = 3, params=None) -> list[PartitionBlock]:
    """Greedy left-to-right blocking.

    A gate joins the open block while the block's qubit set stays within
    ``block_size``; otherwise the block is closed and a new one opened.
    Concatenating the blocks reproduces the parent gate list.

    Raises:
        ValueError: if a gate is wider than ``block_size``.
    """
    theta = np.zeros(circuit.num_params) if params is None else np.asarray(params, dtype=float)
    blocks, current, qset = [], [], set()
    for i, g in enumerate(circuit.gates):
        if len(g.qubits) > block_size:
            raise ValueError(f"gate {i} ({g.name}) is wider than block size {block_size}")
        grown = qset | set(g.qubits)
        if current and len(grown) > block_size:
            blocks.append(_make_block(circuit, theta, current))
            current, grown = [], set(g.qubits)
        current.append(i)
        qset = grown
    if current:
        blocks.append(_make_block(circuit, theta, current))
    return blocks


def _to_parent(block: PartitionBlock, local: Circuit, first_slot: int) -> list[Gate]:
    """Map a local circuit back to parent qubits; slots renumbered from ``first_slot``."""
    if local.num_qubits != len(block.qubits):
        raise RuntimeError("optimized block does not match its qubit mapping")
    out = []
    for g in local.gates:
        qs = tuple(block.qubits[q] for q in g.qubits)
        out.append(Gate(g.name, qs, None if g.param is None else first_slot + g.param))
    return out


def flatten(blocks: list[PartitionBlock], num_qubits: int) -> Circuit:
    """Concatenate blocks in order, restoring the parent's slot numbers."""
    gates = []
    for b in blocks:
        for g in b.circuit.gates:
            qs = tuple(b.qubits[q] for q in g.qubits)
            gates.append(Gate(g.name, qs, None if g.param is None else b.param_map[g.param]))
    return Circuit(num_qubits, gates)


def _passthrough(block: PartitionBlock, threshold: float, message: str = "") -> RoundingOutcome:
    c = block.circuit
    return RoundingOutcome(
        success=not message, final_circuit=c, residual_params=np.array(block.params, dtype=float),
        n_rounded=0, n_clifford=0, n_t_gates=t_count(c), leftover_rz=c.num_params,
        verified_distance=0.0, bound_distance=0.0, threshold=threshold, message=message,
    )


def _run_block(args) -> RoundingOutcome:
    block, plan, cfg, seed_seq = args
    if block.circuit.num_params == 0:
        return _passthrough(block, cfg.threshold)
    try:
        out = two_phase_round(
            block.circuit, block.params, cfg, num_starts=plan.num_starts,
            angle_set=plan.angle_set, rng=np.random.default_rng(seed_seq),
            penalty_factor=plan.penalty_factor,
        )
    except Exception as exc:  # one bad block must not sink the whole circuit
        return _passthrough(block, cfg.threshold, f"block failed: {exc}")
    if not out.success:
        return _passthrough(block, cfg.threshold, out.message or "block failed")
    return out


def optimize_blocks(
    blocks: list[PartitionBlock], plan: PartitionPlan, parallelism: int = 1
) -> list[RoundingOutcome]:
    """Round every block against its own unitary; failures pass through unchanged.

    Blocks without Rz gates contribute no error, so the uniform budget is
    split over the Rz-carrying blocks only. Each block draws from its own
    child seed, so results do not depend on ``parallelism``.
    """
    with_rz = sum(1 for b in blocks if b.circuit.num_params)
    cfg = plan.block_threshold(with_rz)
    seeds = np.random.SeedSequence(plan.seed).spawn(len(blocks))
    jobs = [(b, plan, cfg, s) for b, s in zip(blocks, seeds)]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as ex:
            return list(ex.map(_run_block, jobs))
    return [_run_block(j) for j in jobs]


@dataclass
class ReassemblySummary:
    rz_before: int
    rz_after: int
    t_before: int
    t_after: int
    error_bound: float
    blocks: int
    flagged: list[int]


def reassemble(
    blocks: list[PartitionBlock], outcomes: list[RoundingOutcome], num_qubits: int
) -> tuple[Circuit, np.ndarray, ReassemblySummary]:
    """Put optimized blocks back in order.

    The reported ``error_bound`` is the sum of per-block verified distances,
    which bounds the distance of the whole circuit.
    """
    if len(blocks) != len(outcomes):
        raise ValueError("need exactly one outcome per block")
    gates, params = [], []
    rz_before = t_before = 0
    bound = 0.0
    flagged = []
    for i, (b, o) in enumerate(zip(blocks, outcomes)):
        gates += _to_parent(b, o.final_circuit, len(params))
        params += [float(x) for x in o.residual_params]
        rz_before += b.circuit.num_params
        t_before += t_count(b.circuit)
        bound += o.verified_distance
        if not o.success:
            flagged.append(i)
    out = Circuit(num_qubits, gates)
    summary = ReassemblySummary(rz_before, out.num_params, t_before, t_count(out), bound, len(blocks), flagged)
    return out, np.array(params, dtype=float), summary


def optimize_circuit(circuit: Circuit, params, plan: PartitionPlan, parallelism: int = 1):
    """Partition, round every block and reassemble. Returns ``(circuit, params, summary, outcomes, blocks)``."""
    blocks = partition(circuit, plan.block_size, params)
    outcomes = optimize_blocks(blocks, plan, parallelism)
    out, out_params, summary = reassemble(blocks, outcomes, circuit.num_qubits)
    return out, out_params, summary, outcomes, blocks


def true_distance(circuit: Circuit, params, other: Circuit, other_params) -> float:
    """Direct distance between two whole circuits (dense, so at most 8 qubits)."""
    if max(circuit.num_qubits, other.num_qubits) > MAX_DENSE_QUBITS:
        raise ValueError("too many qubits for a dense check")
    return distance(build_unitary(circuit, params), build_unitary(other, other_params))
