"""Local and multistart minimization of the rounding objective.

The local solver is scipy's BFGS with the analytic gradient from
:mod:`rzround.cost`. When its line search stalls on a kink of the penalty
term, backtracking gradient steps move the point past the kink and BFGS is
restarted.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sopt

from .circuit import Circuit
from .cost import (
    EpsilonVector,
    ObjectiveConfig,
    distance_squared_and_gradient,
    objective,
    objective_and_gradient,
)

DEFAULT_BUDGET = 1000
DEFAULT_STARTS = 10
GTOL = 1e-10


@dataclass
class OptResult:
    params: np.ndarray
    objective_value: float
    distance_part: float
    epsilon: EpsilonVector
    iterations: int
    start_label: str


@dataclass(frozen=True)
class PoolEntry:
    params: np.ndarray
    objective_value: float
    config: ObjectiveConfig


class SeedPool:
    """Bounded store of parameter vectors that worked before.

    Entries keep the objective configuration they were scored under. When
    full, a better entry replaces the worst one. Near-duplicates (equal
    modulo 2*pi within 1e-9) are ignored.
    """

    def __init__(self, capacity: int = 32):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: list[PoolEntry] = []
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def entries(self) -> list[PoolEntry]:
        with self._lock:
            return list(self._entries)

    def add(self, params, objective_value: float, config: ObjectiveConfig) -> bool:
        params = np.array(params, dtype=float)
        with self._lock:
            for e in self._entries:
                if e.params.shape == params.shape and _same_angles(e.params, params):
                    return False
            entry = PoolEntry(params, float(objective_value), config)
            if len(self._entries) >= self.capacity:
                if objective_value >= self._entries[-1].objective_value:
                    return False
                self._entries.pop()
            self._entries.append(entry)
            # stable sort keeps insertion order among equal scores
            self._entries.sort(key=lambda e: e.objective_value)
            return True


def _same_angles(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    d = np.mod(a - b + math.pi, 2 * math.pi) - math.pi
    return bool(np.all(np.abs(d) <= tol))


def evaluate(circuit, config, params, iterations=0, label="eval") -> OptResult:
    """Wrap ``params`` in an :class:`OptResult` scored under ``config``."""
    value, dist, eps = objective(circuit, params, config)
    return OptResult(np.array(params, dtype=float), value, dist, eps, iterations, label)


def _bfgs(fun, x0, budget, gtol=GTOL):
    with warnings.catch_warnings():
        # BFGS warns on line-search failure at penalty kinks; the best point is still returned
        warnings.simplefilter("ignore")
        return _sopt.minimize(
            fun, x0, jac=True, method="BFGS", options={"maxiter": budget, "gtol": gtol}
        )


def minimize(
    circuit: Circuit,
    config: ObjectiveConfig,
    start,
    budget: int = DEFAULT_BUDGET,
    label: str = "start",
) -> OptResult:
    """Descend the objective from ``start``; never returns a worse point.

    Raises:
        ValueError: if the objective at ``start`` is not finite.
    """
    x0 = np.array(start, dtype=float)
    f0 = objective(circuit, x0, config)[0]
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at the start point")
    if circuit.num_params == 0:
        return evaluate(circuit, config, x0, 0, label)
    fun = lambda x: objective_and_gradient(circuit, x, config)  # noqa: E731
    x, f, used = x0, f0, 0
    for _ in range(_RESTARTS):
        res = _bfgs(fun, x, budget - used)
        used += int(res.nit)
        if res.fun < f:
            x, f = res.x, float(res.fun)
        # a line search that fails on its first step means BFGS is stuck at a kink
        if res.nit > 0 or used >= budget:
            break
        y, g = _backtrack(fun, x, f, _KINK_STEPS)
        used += _KINK_STEPS
        if not g < f:
            break
        x, f = y, g
    return evaluate(circuit, config, x, used, label)


_RESTARTS = 4
_KINK_STEPS = 30


def _backtrack(fun, x, f, steps):
    """Plain gradient steps with Armijo backtracking; they cross kinks BFGS stalls on."""
    for _ in range(steps):
        _, g = fun(x)
        gg = float(g @ g)
        if gg == 0.0:
            break
        t = 1.0
        while t > 1e-12:
            y = x - t * g
            fy = fun(y)[0]
            if fy <= f - 1e-4 * t * gg:
                break
            t *= 0.5
        else:
            break
        x, f = y, fy
    return x, f


def minimize_distance(
    circuit: Circuit,
    target,
    start,
    free=None,
    budget: int = DEFAULT_BUDGET,
) -> tuple[np.ndarray, float]:
    """Minimize the smooth squared distance over the ``free`` slots.

    Slots outside ``free`` stay at their ``start`` values. Returns the full
    parameter vector and its distance.
    """
    x = np.array(start, dtype=float)
    free = np.arange(x.size) if free is None else np.asarray(free, dtype=int)
    f0, _ = distance_squared_and_gradient(circuit, x, target)
    if free.size == 0 or f0 == 0.0:
        return x, math.sqrt(f0)

    def fun(y):
        z = x.copy()
        z[free] = y
        return distance_squared_and_gradient(circuit, z, target, free)

    # gradient of d^2 scales with d, so a tight gtol is what drives d below ~1e-12
    res = _bfgs(fun, x[free], budget, gtol=1e-14)
    if res.fun < f0:
        x[free] = res.x
        return x, math.sqrt(max(res.fun, 0.0))
    return x, math.sqrt(f0)


def _starting_points(circuit, pool, num_starts, rng):
    """Pool entries first (best first), then uniform draws in [-pi, pi]."""
    starts = []
    if pool is not None:
        entries = [e for e in pool.entries() if e.params.shape == (circuit.num_params,)]
        # keep at least one fresh random start whenever more than one start is requested
        take = min(len(entries), num_starts - 1 if num_starts > 1 else 1)
        starts += [(e.params.copy(), f"pool{i}") for i, e in enumerate(entries[:take])]
    while len(starts) < num_starts:
        starts.append((rng.uniform(-math.pi, math.pi, circuit.num_params), f"random{len(starts)}"))
    return starts


def _best(results: list[OptResult]) -> OptResult:
    # min() keeps the first of equal values, i.e. start-label order
    return min(results, key=lambda r: r.objective_value)


def multistart(
    circuit: Circuit,
    config: ObjectiveConfig,
    pool: SeedPool | None = None,
    num_starts: int = DEFAULT_STARTS,
    rng: np.random.Generator | None = None,
    success_threshold: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> OptResult:
    """Best of ``num_starts`` local solves from pool entries and random points.

    Results whose distance part is at most ``success_threshold`` are added to
    ``pool``.
    """
    if num_starts < 1:
        raise ValueError("num_starts must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    results = [
        minimize(circuit, config, x0, budget, label)
        for x0, label in _starting_points(circuit, pool, num_starts, rng)
    ]
    _feed_pool(pool, results, config, success_threshold)
    return _best(results)


def _feed_pool(pool, results, config, success_threshold):
    if pool is None or success_threshold is None:
        return
    for r in results:
        if r.distance_part <= success_threshold:
            pool.add(r.params, r.objective_value, config)


def two_step_candidates(
    circuit: Circuit,
    config: ObjectiveConfig,
    pool: SeedPool | None = None,
    num_starts: int = DEFAULT_STARTS,
    rng: np.random.Generator | None = None,
    success_threshold: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> list[OptResult]:
    """All second-step results of :func:`two_step`, best first."""
    if num_starts < 1:
        raise ValueError("num_starts must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    target = np.asarray(config.target)
    base = config.with_n(0)
    first = []
    for x0, label in _starting_points(circuit, pool, num_starts, rng):
        x, _ = minimize_distance(circuit, target, x0, budget=budget)
        first.append(evaluate(circuit, base, x, 0, label))
    _feed_pool(pool, first, base, success_threshold)
    if config.n_round == 0:
        second = first
    else:
        second = [minimize(circuit, config, r.params, budget, r.start_label) for r in first]
    return sorted(second, key=lambda r: r.objective_value)


def two_step(
    circuit: Circuit,
    config: ObjectiveConfig,
    pool: SeedPool | None = None,
    num_starts: int = DEFAULT_STARTS,
    rng: np.random.Generator | None = None,
    success_threshold: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> OptResult:
    """Distance-only solves from each start, then the full objective from those.

    Squared distance is minimized in the first step: same minimizers as the
    distance itself, but smooth at zero.
    """
    return two_step_candidates(circuit, config, pool, num_starts, rng, success_threshold, budget)[0]
