import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rzround.circuit import GATE_MATRICES, build_unitary, circuit_from_ops, rz_matrix
from rzround.cost import (
    CLIFFORD,
    CLIFFORD_T,
    EIGHTH,
    AngleSet,
    ObjectiveConfig,
    distance,
    epsilon_vector,
    objective,
    objective_gradient,
    rounding_cost,
    substitution_error,
)

angles = st.floats(-20, 20, allow_nan=False)


def test_distance_examples():
    assert distance(np.eye(2), np.eye(2)) == 0.0
    assert distance(np.eye(2), GATE_MATRICES["z"]) == pytest.approx(1.0, abs=1e-15)
    d = distance(rz_matrix(0.4), rz_matrix(0.4 + math.pi / 2))
    assert d == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_distance_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        distance(np.eye(2), np.eye(4))


def test_distance_kron_with_identity():
    rng = np.random.default_rng(0)
    u, v = oracles.random_unitary(4, rng), oracles.random_unitary(4, rng)
    assert distance(np.kron(u, np.eye(2)), np.kron(v, np.eye(2))) == pytest.approx(distance(u, v), abs=1e-12)


def test_distance_matches_oracles():
    rng = np.random.default_rng(1)
    for dim in (2, 4, 8):
        for _ in range(50):
            u, v = oracles.random_unitary(dim, rng), oracles.random_unitary(dim, rng)
            assert distance(u, v) == pytest.approx(oracles.trace_distance(u, v), abs=1e-12)
            assert distance(u, v) == pytest.approx(oracles.aligned_distance(u, v), abs=1e-12)


def test_distance_precise_near_zero():
    # the textbook formula floors near 1.5e-8; the stable one tracks the true value
    u = rz_matrix(0.3)
    for delta in (1e-6, 1e-9, 1e-12):
        assert distance(u, rz_matrix(0.3 + delta)) == pytest.approx(delta / 2, rel=1e-4)


def test_substitution_error_examples():
    assert substitution_error(0.0) == 0.0
    assert substitution_error(math.pi) == pytest.approx(1.0)
    assert substitution_error(math.pi / 2) == pytest.approx(math.sqrt(0.5 * (1 - math.cos(math.pi / 2))))


@given(angles, angles)
def test_substitution_error_is_rz_distance(a, delta):
    assert substitution_error(delta) == pytest.approx(distance(rz_matrix(a), rz_matrix(a + delta)), abs=1e-12)


def test_rounding_cost_examples():
    assert rounding_cost(math.pi / 4, CLIFFORD_T) == (0.0, pytest.approx(math.pi / 4))
    eps, near = rounding_cost(math.pi / 8, CLIFFORD_T)
    assert eps == pytest.approx(math.pi / 16) and near == 0.0
    eps, near = rounding_cost(2 * math.pi - 0.01, CLIFFORD_T)
    assert eps == pytest.approx(0.005, abs=1e-12)
    assert near == 0.0


@pytest.mark.parametrize("aset", [CLIFFORD, CLIFFORD_T, EIGHTH])
def test_rounding_cost_matches_scan(aset):
    rng = np.random.default_rng(2)
    for theta in np.concatenate([rng.uniform(-4 * math.pi, 4 * math.pi, 300), [2 * math.pi - 0.01, -0.01]]):
        eps, near = rounding_cost(theta, aset)
        ref_near, ref_eps = oracles.nearest_by_scan(theta, aset.step)
        assert eps == pytest.approx(ref_eps, abs=1e-11)
        assert math.isclose(near, ref_near, abs_tol=1e-11) or math.isclose(abs(near - ref_near), 2 * math.pi, abs_tol=1e-11)


@given(angles, st.integers(-5, 5))
def test_rounding_cost_periodic(theta, k):
    a = rounding_cost(theta, CLIFFORD_T)[0]
    b = rounding_cost(theta + 2 * math.pi * k, CLIFFORD_T)[0]
    assert a == pytest.approx(b, abs=1e-9)


@given(st.integers(-40, 40))
def test_rounding_cost_zero_on_members(k):
    assert rounding_cost(k * math.pi / 4, CLIFFORD_T)[0] == pytest.approx(0.0, abs=1e-12)


def test_explicit_angle_set():
    d = AngleSet.explicit("pair", [0.0, 1.0])
    assert rounding_cost(0.9, d) == (pytest.approx(0.05), 1.0)
    assert rounding_cost(-0.2, d) == (pytest.approx(0.1), 0.0)
    with pytest.raises(ValueError):
        AngleSet.explicit("empty", [])
    with pytest.raises(ValueError):
        AngleSet.lattice("bad", 0.3)


def test_epsilon_order_breaks_ties_by_index():
    eps = epsilon_vector([0.1, -0.1, 0.1, math.pi / 4], CLIFFORD_T)
    assert list(eps.order) == [3, 0, 1, 2]


def test_objective_examples():
    c = circuit_from_ops(1, [("rz", 0)])
    cfg0 = ObjectiveConfig(rz_matrix(0.7), CLIFFORD_T, 0)
    value, dist, _ = objective(c, [0.2], cfg0)
    assert value == dist == pytest.approx(abs(math.sin(0.25)))
    cfg1 = ObjectiveConfig(rz_matrix(math.pi / 4), CLIFFORD_T, 1)
    assert objective(c, [math.pi / 4], cfg1)[0] == pytest.approx(0.0, abs=1e-15)


def test_objective_rejects_bad_config():
    c = circuit_from_ops(1, [("rz", 0)])
    with pytest.raises(ValueError):
        objective(c, [0.0], ObjectiveConfig(np.eye(4), CLIFFORD_T))
    with pytest.raises(ValueError):
        objective(c, [0.0], ObjectiveConfig(np.eye(2), CLIFFORD_T, 2))
    with pytest.raises(ValueError):
        ObjectiveConfig(np.eye(2), CLIFFORD_T, -1)


def test_objective_gradient_finite_differences():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 25:
        n = int(rng.integers(1, 4))
        c = circuit_from_ops(n, oracles.random_ops(n, 16, rng))
        if c.num_params == 0:
            continue
        theta = rng.uniform(-math.pi, math.pi, c.num_params)
        target = oracles.random_unitary(c.dim, rng)
        cfg = ObjectiveConfig(target, CLIFFORD_T, int(rng.integers(0, c.num_params + 1)))
        eps = epsilon_vector(theta, CLIFFORD_T)
        if min(abs(abs(eps.delta) - x).min() for x in (0.0, math.pi / 8)) < 1e-4:
            continue
        fd = oracles.central_difference(lambda x: objective(c, x, cfg)[0], theta)
        np.testing.assert_allclose(objective_gradient(c, theta, cfg), fd, atol=1e-6)
        checked += 1


def test_gradient_finite_at_zero_distance():
    c = circuit_from_ops(1, [("rz", 0)])
    cfg = ObjectiveConfig(build_unitary(c, [0.5]), CLIFFORD_T, 0)
    assert np.all(np.isfinite(objective_gradient(c, [0.5], cfg)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_objective_monotone_in_n(n, seed):
    rng = np.random.default_rng(seed)
    c = circuit_from_ops(n, oracles.random_ops(n, 12, rng))
    theta = rng.uniform(-math.pi, math.pi, c.num_params)
    cfg = ObjectiveConfig(oracles.random_unitary(c.dim, rng), EIGHTH)
    values = [objective(c, theta, cfg.with_n(k))[0] for k in range(c.num_params + 1)]
    assert all(b >= a for a, b in zip(values, values[1:]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_properties(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.choice([2, 4, 8]))
    u, v = oracles.random_unitary(dim, rng), oracles.random_unitary(dim, rng)
    assert distance(u, v) == pytest.approx(distance(v, u), abs=1e-12)
    assert distance(u, np.exp(1j * rng.uniform(0, 7)) * u) < 1e-12
    assert 0.0 <= distance(u, v) <= 1.0
