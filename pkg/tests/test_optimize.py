import math

import numpy as np
import pytest

from rzround.circuit import build_unitary, circuit_from_ops, rz_matrix
from rzround.cost import CLIFFORD_T, ObjectiveConfig, distance, objective
from rzround.library import toffoli_ansatz, toffoli_matrix
from rzround.optimize import SeedPool, minimize, minimize_distance, multistart, two_step

ONE_RZ = circuit_from_ops(1, [("rz", 0)])


def test_minimize_reaches_closed_form():
    cfg = ObjectiveConfig(rz_matrix(0.3), CLIFFORD_T, 0)
    r = minimize(ONE_RZ, cfg, [1.0])
    assert abs(math.remainder(r.params[0] - 0.3, 2 * math.pi)) < 1e-6
    assert r.distance_part <= 1e-9


def test_minimize_with_dominating_penalty_matches_scan():
    # 0.3 lies in the basin of 0, so pi/4 is a local minimum; start inside its basin
    cfg = ObjectiveConfig(rz_matrix(0.3), CLIFFORD_T, 1, penalty_factor=10.0)
    r = minimize(ONE_RZ, cfg, [0.6])
    grid = np.linspace(math.pi / 8 + 1e-9, 3 * math.pi / 8, 100001)
    scan = [objective(ONE_RZ, [x], cfg)[0] for x in grid]
    best = grid[int(np.argmin(scan))]
    assert r.params[0] == pytest.approx(best, abs=1e-4)
    assert r.params[0] == pytest.approx(math.pi / 4, abs=1e-6)
    assert r.distance_part == pytest.approx(abs(math.sin((0.3 - math.pi / 4) / 2)), abs=1e-6)


def test_minimize_finds_global_basin_from_nearby_start():
    cfg = ObjectiveConfig(rz_matrix(0.3), CLIFFORD_T, 1, penalty_factor=10.0)
    r = minimize(ONE_RZ, cfg, [0.2])
    assert abs(r.params[0]) < 1e-6
    assert r.distance_part == pytest.approx(math.sin(0.15), abs=1e-9)


def test_minimize_at_global_minimum_returns_start():
    cfg = ObjectiveConfig(rz_matrix(math.pi / 4), CLIFFORD_T, 1)
    r = minimize(ONE_RZ, cfg, [math.pi / 4])
    assert r.objective_value <= objective(ONE_RZ, [math.pi / 4], cfg)[0] + 1e-12
    assert r.params[0] == pytest.approx(math.pi / 4, abs=1e-12)


def test_minimize_never_ascends():
    rng = np.random.default_rng(4)
    c, _ = toffoli_ansatz()
    cfg = ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, 4)
    for _ in range(5):
        x0 = rng.uniform(-math.pi, math.pi, c.num_params)
        assert minimize(c, cfg, x0, budget=50).objective_value <= objective(c, x0, cfg)[0] + 1e-12


def test_minimize_rejects_non_finite_start():
    cfg = ObjectiveConfig(rz_matrix(0.3), CLIFFORD_T, 0)
    with pytest.raises(ValueError):
        minimize(ONE_RZ, cfg, [float("inf")])


def test_minimize_distance_keeps_fixed_slots():
    c = circuit_from_ops(1, [("rz", 0), ("h", 0), ("rz", 0)])
    target = build_unitary(c, [0.4, 0.9])
    x, d = minimize_distance(c, target, [0.4, 0.0], free=[1])
    assert x[0] == 0.4
    assert d < 1e-12


def test_multistart_deterministic():
    c, _ = toffoli_ansatz()
    cfg = ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, 0)
    a = multistart(c, cfg, num_starts=3, rng=np.random.default_rng(9))
    b = multistart(c, cfg, num_starts=3, rng=np.random.default_rng(9))
    np.testing.assert_array_equal(a.params, b.params)


def test_multistart_one_start_equals_minimize():
    c, _ = toffoli_ansatz()
    cfg = ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, 0)
    r = multistart(c, cfg, num_starts=1, rng=np.random.default_rng(2))
    x0 = np.random.default_rng(2).uniform(-math.pi, math.pi, c.num_params)
    np.testing.assert_array_equal(r.params, minimize(c, cfg, x0).params)


def test_multistart_preloaded_pool_is_never_worse():
    c, known = toffoli_ansatz()
    cfg = ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, 7)
    pool = SeedPool()
    pool.add(known, objective(c, known, cfg)[0], cfg)
    r = multistart(c, cfg, pool, num_starts=2, rng=np.random.default_rng(0))
    assert r.objective_value <= objective(c, known, cfg)[0]


def test_two_step_with_zero_n_reaches_target():
    c, _ = toffoli_ansatz()
    cfg = ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, 0)
    r = two_step(c, cfg, num_starts=4, rng=np.random.default_rng(1))
    assert r.distance_part < 1e-8


def test_pool_entries_reproduce_stored_objective():
    c, known = toffoli_ansatz()
    rng = np.random.default_rng(3)
    pool = SeedPool(capacity=4)
    configs = [ObjectiveConfig(toffoli_matrix(), CLIFFORD_T, n) for n in range(8)]
    for cfg in configs:
        x = known + rng.normal(0, 0.01, known.size)
        pool.add(x, objective(c, x, cfg)[0], cfg)
    assert len(pool) == 4
    for e in pool.entries():
        assert objective(c, e.params, e.config)[0] == pytest.approx(e.objective_value, abs=1e-12)


def test_pool_drops_duplicates_mod_two_pi():
    cfg = ObjectiveConfig(rz_matrix(0.3), CLIFFORD_T, 0)
    pool = SeedPool()
    assert pool.add([0.3], 0.0, cfg)
    assert not pool.add([0.3 + 2 * math.pi], 0.0, cfg)
    assert distance(rz_matrix(0.3), rz_matrix(pool.entries()[0].params[0])) == 0.0
