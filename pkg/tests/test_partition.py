import math
import time

import numpy as np
import pytest

import oracles
from rzround.circuit import circuit_from_ops
from rzround.library import planted_ladder, qft_ansatz, toffoli_ansatz
from rzround.partition import (
    PartitionPlan,
    _passthrough,
    _run_block,
    flatten,
    optimize_blocks,
    optimize_circuit,
    partition,
    reassemble,
    true_distance,
)


def _per_qubit_order(circuit, qubits):
    """Gate indices touching each qubit, in order: what any valid blocking must preserve."""
    return {q: [i for i, g in enumerate(circuit.gates) if q in g.qubits] for q in qubits}


def test_small_circuit_is_one_block():
    c = circuit_from_ops(2, [("h", 0), ("cx", [0, 1]), ("rz", 1), ("t", 0)])
    (b,) = partition(c, 3)
    assert b.gate_indices == (0, 1, 2, 3)


def test_disjoint_groups_give_two_blocks():
    ops = [("h", 0), ("cx", [0, 1]), ("rz", 1), ("cx", [1, 0])]
    ops += [("h", 2), ("cx", [2, 3]), ("rz", 3), ("s", 2)]
    c = circuit_from_ops(4, ops)
    blocks = partition(c, 2)
    assert len(blocks) == 2
    assert [set(b.qubits) for b in blocks] == [{0, 1}, {2, 3}]


def test_wide_gate_rejected():
    with pytest.raises(ValueError):
        partition(circuit_from_ops(2, [("cx", [0, 1])]), 1)
    with pytest.raises(ValueError):
        PartitionPlan(block_size=1)


def test_flatten_round_trip_and_dependency_order():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        c = circuit_from_ops(n, oracles.random_ops(n, 40, rng))
        k = int(rng.integers(2, 5))
        blocks = partition(c, k)
        assert flatten(blocks, n) == c
        order = [i for b in blocks for i in b.gate_indices]
        assert order == list(range(len(c.gates)))
        assert all(len(b.qubits) <= k for b in blocks)
        # brute force: per-qubit order of the concatenation matches the parent
        flat = flatten(blocks, n)
        assert _per_qubit_order(flat, range(n)) == _per_qubit_order(c, range(n))


def test_all_clifford_block_unchanged():
    c = circuit_from_ops(2, [("h", 0), ("cx", [0, 1]), ("s", 1)])
    blocks = partition(c, 3)
    outcomes = optimize_blocks(blocks, PartitionPlan(seed=0))
    out, params, summary = reassemble(blocks, outcomes, 2)
    assert out == c and params.size == 0 and summary.error_bound == 0.0


def test_unchanged_outcomes_reassemble_to_input():
    c, p = qft_ansatz(3)
    blocks = partition(c, 2, p)
    out, params, summary = reassemble(blocks, [_passthrough(b, 1e-8) for b in blocks], 3)
    assert out == c
    np.testing.assert_array_equal(params, p)
    assert summary.rz_before == summary.rz_after == 9


@pytest.mark.slow
def test_toffoli_block_matches_direct_run():
    c, p = toffoli_ansatz()
    out, _, summary, outcomes, blocks = optimize_circuit(c, p, PartitionPlan(block_size=3, seed=1))
    assert len(blocks) == 1
    assert summary.t_after == 7 and summary.rz_after == 0 and not summary.flagged


def test_budget_policies():
    plan = PartitionPlan(threshold=1e-6)
    assert plan.block_threshold(4).threshold == pytest.approx(2.5e-7)
    assert PartitionPlan(threshold=1e-6, budget_policy="fixed").block_threshold(4).threshold == 1e-6
    with pytest.raises(ValueError):
        PartitionPlan(budget_policy="greedy")


@pytest.mark.slow
def test_small_ladder_bound_covers_true_distance():
    c, p, planted = planted_ladder(num_qubits=4, layers=1, seed=3)
    plan = PartitionPlan(block_size=3, threshold=1e-4, seed=2, num_starts=4)
    out, q, summary, outcomes, _ = optimize_circuit(c, p, plan)
    assert not summary.flagged
    assert summary.rz_after == c.num_params - int(planted.sum())
    assert true_distance(c, p, out, q) <= summary.error_bound + 1e-12
    assert summary.error_bound <= 1e-4


def test_results_do_not_depend_on_parallelism():
    c, p, _ = planted_ladder(num_qubits=4, layers=1, seed=4)
    plan = PartitionPlan(block_size=2, threshold=1e-4, seed=7, num_starts=2)
    a = optimize_circuit(c, p, plan, parallelism=1)
    b = optimize_circuit(c, p, plan, parallelism=2)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_failed_block_is_flagged_and_passed_through():
    c = circuit_from_ops(1, [("rz", 0), ("h", 0)])
    (b,) = partition(c, 2, [math.pi / 3])
    out = _run_block((b, PartitionPlan(), PartitionPlan().block_threshold(1), np.random.SeedSequence(0)))
    assert out.success
    bad = type(b)(b.qubits, b.gate_indices, b.circuit, b.param_map, np.array([np.nan]))
    out = _run_block((bad, PartitionPlan(), PartitionPlan().block_threshold(1), np.random.SeedSequence(0)))
    assert not out.success and out.final_circuit == b.circuit and "failed" in out.message


def test_partition_time_grows_slowly(capsys):
    # measured, not a hard bound: blocking is one pass over the gate list
    rows = []
    for layers in (2, 8, 32):
        c, p, _ = planted_ladder(num_qubits=8, layers=layers, seed=0)
        start = time.perf_counter()
        blocks = partition(c, 3, p)
        rows.append((len(c.gates), len(blocks), time.perf_counter() - start))
    with capsys.disabled():
        print("\npartition scaling (gates, blocks, seconds):", [(g, b, f"{s:.4f}") for g, b, s in rows])
    assert rows[-1][1] <= rows[0][1] * (rows[-1][0] / rows[0][0]) * 1.5
