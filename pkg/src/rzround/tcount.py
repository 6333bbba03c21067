"""Rz rounding: snapping, the maximal-N binary search and Clifford-first rounding.

Feasibility of rounding ``N`` gates is decided on a concrete witness: the
``N`` cheapest Rz gates are snapped to the angle set, the remaining angles
are re-fitted to the target with the snapped ones held fixed, and the
distance of the snapped circuit is computed directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import MAX_DENSE_QUBITS, Circuit, Gate, _as_params, build_unitary
from .cost import (
    CLIFFORD,
    CLIFFORD_T,
    AngleSet,
    ObjectiveConfig,
    distance,
    epsilon_vector,
    substitution_error,
)
from .optimize import (
    DEFAULT_BUDGET,
    DEFAULT_STARTS,
    OptResult,
    SeedPool,
    evaluate,
    minimize,
    minimize_distance,
    two_step_candidates,
)

DEFAULT_THRESHOLD = 1e-8
# optimizer candidates examined per probe, best objective first
_MAX_CHECKS = 3

_PI8 = math.pi / 8
_QUARTER_WORDS = {
    0: (),
    1: ("t",),
    2: ("s",),
    3: ("s", "t"),
    4: ("z",),
    5: ("z", "t"),
    6: ("sdg",),
    7: ("tdg",),
}


@dataclass(frozen=True)
class ThresholdConfig:
    threshold: float = DEFAULT_THRESHOLD
    mode: str = "direct"

    def __post_init__(self):
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must lie in (0, 1]")
        if self.mode not in ("direct", "bound"):
            raise ValueError(f"unknown acceptance mode {self.mode!r}")


def eighths(angle: float) -> int:
    """``angle`` as a multiple of pi/8 in ``0..15``; ValueError if it is not one."""
    k = round(angle / _PI8)
    if abs(angle - k * _PI8) > 1e-9:
        raise ValueError(f"angle {angle!r} is not a multiple of pi/8")
    return k % 16


def gate_word(angle: float) -> tuple[str, ...]:
    """Fixed gates equal to ``rz(angle)`` up to global phase.

    Multiples of pi/4 use at most one T or Tdg; odd multiples of pi/8 use
    exactly one sqrtt or sqrttdg and no T.

    >>> gate_word(3 * math.pi / 4)
    ('s', 't')
    """
    k = eighths(angle)
    if k % 2 == 0:
        return _QUARTER_WORDS[k // 2]
    if k % 4 == 1:
        return _QUARTER_WORDS[(k - 1) // 2] + ("sqrtt",)
    return _QUARTER_WORDS[((k + 1) // 2) % 8] + ("sqrttdg",)


def angle_class(angle: float) -> str:
    """``clifford``, ``t`` or ``sqrt_t`` for a lattice angle."""
    k = eighths(angle)
    if k % 4 == 0:
        return "clifford"
    return "t" if k % 2 == 0 else "sqrt_t"


def snap(circuit: Circuit, params, selection, d: AngleSet) -> tuple[Circuit, np.ndarray]:
    """Replace the selected Rz gates by the fixed gates of their nearest angle in ``d``.

    Unselected Rz gates keep their angles; their slots are renumbered
    ``0..`` in the order of their old slot numbers.
    """
    theta = _as_params(circuit, params)
    sel = {int(i) for i in selection}
    if any(i < 0 or i >= circuit.num_params for i in sel):
        raise ValueError("selection contains an unknown parameter slot")
    near, _ = d.nearest(theta)
    keep = [i for i in range(circuit.num_params) if i not in sel]
    renumber = {old: new for new, old in enumerate(keep)}
    gates = []
    for g in circuit.gates:
        if g.param is None:
            gates.append(g)
        elif g.param in sel:
            gates.extend(Gate(name, g.qubits) for name in gate_word(float(near[g.param])))
        else:
            gates.append(Gate("rz", g.qubits, renumber[g.param]))
    return Circuit(circuit.num_qubits, gates), theta[keep]


def t_count(circuit: Circuit) -> int:
    return circuit.count("t", "tdg")


@dataclass
class Witness:
    """A verified rounding of ``n`` gates.

    ``params`` is full length for the unsnapped circuit, with snapped slots
    holding their lattice values; ``circuit``/``residual`` are the snapped
    result.
    """

    n: int
    params: np.ndarray
    selection: tuple[int, ...]
    snapped_angles: tuple[float, ...]
    circuit: Circuit
    residual: np.ndarray
    verified_distance: float
    bound_distance: float


def check_feasible(
    circuit: Circuit,
    target,
    params,
    n: int,
    d: AngleSet,
    cfg: ThresholdConfig,
    penalty_factor: float = 1.0,
) -> Witness | None:
    """Snap the ``n`` cheapest gates of ``params`` and verify against ``cfg``.

    ``bound_distance`` is the distance before snapping plus the exact
    substitution error of every snapped gate, which upper-bounds the distance
    of the snapped circuit. In ``bound`` mode the penalty form of that bound
    must also be within the threshold.
    """
    theta = np.array(params, dtype=float)
    thr = cfg.threshold
    eps = epsilon_vector(theta, d)
    sel = np.sort(eps.order[:n])
    dist = distance(target, build_unitary(circuit, theta))
    bound = dist + sum(substitution_error(x) for x in eps.delta[sel])
    if cfg.mode == "bound" and dist + penalty_factor * float(np.sum(eps.values[sel])) > thr:
        return None
    snapped = theta.copy()
    snapped[sel] = theta[sel] - eps.delta[sel]
    out, residual = snap(circuit, snapped, sel, d)
    verified = distance(target, build_unitary(out, residual))
    free = np.setdiff1d(np.arange(theta.size), sel)
    if verified > thr and free.size:
        snapped, _ = minimize_distance(circuit, target, snapped, free)
        out, residual = snap(circuit, snapped, sel, d)
        verified = distance(target, build_unitary(out, residual))
    if verified > thr:
        return None
    angles = tuple(float(a) for a in eps.nearest[sel])
    return Witness(n, snapped, tuple(int(i) for i in sel), angles, out, residual, verified, bound)


@dataclass
class SearchResult:
    n: int
    feasible: bool
    witness: Witness | None
    opt: OptResult | None
    probes: dict[int, bool] = field(default_factory=dict)
    message: str = ""


def _remember(pool: SeedPool, circuit: Circuit, w: Witness, config: ObjectiveConfig):
    pool.add(w.params, evaluate(circuit, config, w.params).objective_value, config)


def _solve_for(
    circuit, config, cfg, pool, num_starts, rng, budget, known=(), label="probe"
) -> tuple[Witness | None, OptResult | None]:
    """Find a witness for ``config.n_round``: known points first, then two-step solves."""
    n, d, target = config.n_round, config.angle_set, config.target
    for x in known:
        w = check_feasible(circuit, target, x, n, d, cfg, config.penalty_factor)
        if w is not None:
            return w, evaluate(circuit, config, x, label=label)
    cands = two_step_candidates(circuit, config, pool, num_starts, rng, cfg.threshold, budget)
    for r in cands[:_MAX_CHECKS]:
        w = check_feasible(circuit, target, r.params, n, d, cfg, config.penalty_factor)
        if w is not None:
            return w, r
    return None, cands[0] if cands else None


def max_roundable(
    circuit: Circuit,
    d: AngleSet,
    cfg: ThresholdConfig = ThresholdConfig(),
    pool: SeedPool | None = None,
    num_starts: int = DEFAULT_STARTS,
    *,
    target=None,
    initial_params=None,
    rng: np.random.Generator | None = None,
    penalty_factor: float = 1.0,
    budget: int = DEFAULT_BUDGET,
) -> SearchResult:
    """Largest ``N`` whose rounding to ``d`` stays within the threshold.

    Binary search over ``0..M``. A failed probe is retried once from the
    witness of the highest feasible ``N`` found so far. If not even ``N = 0``
    meets the threshold the result has ``feasible=False`` and a message.
    """
    if circuit.num_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"{circuit.num_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}; partition first")
    if target is None:
        if initial_params is None:
            raise ValueError("need a target unitary or initial parameters")
        target = build_unitary(circuit, initial_params)
    rng = np.random.default_rng() if rng is None else rng
    pool = SeedPool() if pool is None else pool
    base = ObjectiveConfig(np.asarray(target), d, 0, penalty_factor)
    known = [] if initial_params is None else [np.asarray(initial_params, dtype=float)]
    probes: dict[int, bool] = {}

    best, best_opt = _solve_for(circuit, base, cfg, pool, num_starts, rng, budget, known)
    probes[0] = best is not None
    if best is None:
        got = best_opt.distance_part if best_opt is not None else float("nan")
        return SearchResult(0, False, None, best_opt, probes,
                            f"no parameters reach the threshold {cfg.threshold:g} even without rounding "
                            f"(best distance {got:.3e})")
    _remember(pool, circuit, best, base)

    lo, hi = 0, circuit.num_params
    while lo < hi:
        mid = (lo + hi + 1) // 2
        config = base.with_n(mid)
        w, opt = _solve_for(circuit, config, cfg, pool, num_starts, rng, budget, [best.params])
        if w is None:
            r = minimize(circuit, config, best.params, budget, label="retry")
            w = check_feasible(circuit, target, r.params, mid, d, cfg, penalty_factor)
            if w is not None:
                opt = r
        probes[mid] = w is not None
        if w is None:
            hi = mid - 1
        else:
            lo, best, best_opt = mid, w, opt
            _remember(pool, circuit, w, config)
    return SearchResult(lo, True, best, best_opt, probes)


@dataclass
class RoundingOutcome:
    """Result of :func:`two_phase_round` for one circuit."""

    success: bool
    final_circuit: Circuit
    residual_params: np.ndarray
    n_rounded: int
    n_clifford: int
    n_t_gates: int
    leftover_rz: int
    verified_distance: float
    bound_distance: float
    threshold: float
    n_cliff_search: int = 0
    snapped_angles: tuple[float, ...] = ()
    probes_all: dict[int, bool] = field(default_factory=dict)
    probes_clifford: dict[int, bool] = field(default_factory=dict)
    message: str = ""

    @property
    def n_t_search(self) -> int:
        return self.n_rounded - self.n_cliff_search

    def angle_classes(self) -> dict[str, int]:
        out = {"clifford": 0, "t": 0, "sqrt_t": 0}
        for a in self.snapped_angles:
            out[angle_class(a)] += 1
        return out


def _outcome(circuit, wits: list[Witness], n_cliff_search, cfg, probes_a, probes_b) -> RoundingOutcome:
    last = wits[-1]
    angles = tuple(a for w in wits for a in w.snapped_angles)
    n_rounded = len(angles)
    return RoundingOutcome(
        success=True,
        final_circuit=last.circuit,
        residual_params=last.residual,
        n_rounded=n_rounded,
        n_clifford=sum(angle_class(a) == "clifford" for a in angles),
        n_t_gates=t_count(last.circuit),
        leftover_rz=circuit.num_params - n_rounded,
        verified_distance=last.verified_distance,
        bound_distance=last.bound_distance,
        threshold=cfg.threshold,
        n_cliff_search=n_cliff_search,
        snapped_angles=angles,
        probes_all=dict(probes_a),
        probes_clifford=dict(probes_b),
    )


def two_phase_round(
    circuit: Circuit,
    initial_params=None,
    cfg: ThresholdConfig = ThresholdConfig(),
    pool: SeedPool | None = None,
    num_starts: int = DEFAULT_STARTS,
    *,
    target=None,
    angle_set: AngleSet = CLIFFORD_T,
    rng: np.random.Generator | None = None,
    penalty_factor: float = 1.0,
    budget: int = DEFAULT_BUDGET,
) -> RoundingOutcome:
    """Round as many Rz gates as possible, preferring Clifford angles.

    Phase A finds the largest ``N`` roundable to ``angle_set``. Phase B then
    binary-searches the largest ``N_cliff <= N`` such that rounding
    ``N_cliff`` gates to multiples of pi/2 and then ``N - N_cliff`` of the
    remaining gates to ``angle_set`` still meets the threshold.
    """
    rng = np.random.default_rng() if rng is None else rng
    pool = SeedPool() if pool is None else pool
    if target is None:
        if initial_params is None:
            raise ValueError("need a target unitary or initial parameters")
        target = build_unitary(circuit, initial_params)
    target = np.asarray(target)

    a = max_roundable(circuit, angle_set, cfg, pool, num_starts, target=target,
                      initial_params=initial_params, rng=rng,
                      penalty_factor=penalty_factor, budget=budget)
    if not a.feasible:
        params = np.zeros(circuit.num_params) if initial_params is None else np.asarray(initial_params, dtype=float)
        return RoundingOutcome(
            success=False, final_circuit=circuit, residual_params=params, n_rounded=0,
            n_clifford=0, n_t_gates=t_count(circuit), leftover_rz=circuit.num_params,
            verified_distance=distance(target, build_unitary(circuit, params)),
            bound_distance=float("nan"), threshold=cfg.threshold,
            probes_all=a.probes, message=a.message,
        )
    wa = a.witness
    n_all = a.n
    c0 = sum(angle_class(x) == "clifford" for x in wa.snapped_angles)
    best = _outcome(circuit, [wa], c0, cfg, a.probes, {})
    if c0 == n_all or angle_set == CLIFFORD:
        return best

    clifford_cfg = ObjectiveConfig(target, CLIFFORD, 0, penalty_factor)
    t_cfg = ObjectiveConfig(target, angle_set, 0, penalty_factor)

    def rest_stage(wc: Witness, n_t: int) -> Witness | None:
        sub = wc.circuit
        sub_pool = SeedPool(pool.capacity)
        sub_pool.add(wc.residual, 0.0, t_cfg)
        w, _ = _solve_for(sub, t_cfg.with_n(n_t), cfg, sub_pool, num_starts, rng, budget, [wc.residual])
        return w

    def probe(nc: int) -> list[Witness] | None:
        config = clifford_cfg.with_n(nc)

        def points():
            yield wa.params
            cands = two_step_candidates(circuit, config, pool, num_starts, rng, cfg.threshold, budget)
            for r in cands[:_MAX_CHECKS]:
                yield r.params

        for x in points():
            wc = check_feasible(circuit, target, x, nc, CLIFFORD, cfg, penalty_factor)
            if wc is None:
                continue
            wt = rest_stage(wc, n_all - nc)
            if wt is not None:
                _remember(pool, circuit, wc, config)
                return [wc, wt]
        return None

    probes_b: dict[int, bool] = {}
    lo, hi = c0, n_all
    while lo < hi:
        mid = (lo + hi + 1) // 2
        found = probe(mid)
        probes_b[mid] = found is not None
        if found is None:
            hi = mid - 1
        else:
            lo = mid
            best = _outcome(circuit, found, mid, cfg, a.probes, {})
    best.probes_clifford = probes_b
    return best
