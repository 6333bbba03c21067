"""Process-infidelity distance, Rz rounding penalties and the rounding objective."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, _as_params, build_unitary, overlap_with_gradient

TWO_PI = 2 * math.pi
_GRAD_FLOOR = 1e-12


def distance(u1, u2) -> float:
    """Process infidelity ``sqrt(1 - |Tr(u1^dag u2)|^2 / dim^2)``, in ``[0, 1]``.

    Evaluated as ``||V - cI||_F / sqrt(dim)`` with ``V = u1^dag u2`` and
    ``c = Tr(V)/dim``. The two forms agree for unitary inputs, but the
    second keeps full relative precision near zero instead of bottoming out
    at ``sqrt(machine eps)``.

    Raises:
        ValueError: if the matrices are not square with equal shape.
    """
    u1 = np.asarray(u1)
    u2 = np.asarray(u2)
    if u1.ndim != 2 or u1.shape[0] != u1.shape[1] or u1.shape != u2.shape:
        raise ValueError(f"distance needs equal square matrices, got {u1.shape} and {u2.shape}")
    if np.array_equal(u1, u2):
        return 0.0
    v = u1.conj().T @ u2
    return _distance_of_overlap(v)


def _distance_of_overlap(v: np.ndarray) -> float:
    dim = v.shape[0]
    c = np.trace(v) / dim
    dev = v.copy()
    dev[np.diag_indices(dim)] -= c
    val = np.vdot(dev, dev).real / dim
    return min(1.0, math.sqrt(max(0.0, val)))


def substitution_error(delta: float) -> float:
    """Distance between ``Rz(a)`` and ``Rz(a + delta)``: ``|sin(delta/2)|``."""
    return abs(math.sin(0.5 * delta))


@dataclass(frozen=True)
class AngleSet:
    """Discrete set of desired Rz angles, taken modulo 2*pi.

    Either a lattice ``offset + k*step`` (``step`` must divide 2*pi) or an
    explicit list of angles.
    """

    name: str
    step: float | None = None
    offset: float = 0.0
    angles: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.angles is None:
            if self.step is None or not self.step > 0:
                raise ValueError("generated angle sets need step > 0")
            n = TWO_PI / self.step
            if abs(n - round(n)) > 1e-9:
                raise ValueError("step must divide 2*pi")
        else:
            if len(self.angles) == 0:
                raise ValueError("explicit angle set is empty")
            canon = sorted({float(np.mod(a, TWO_PI)) for a in self.angles})
            object.__setattr__(self, "angles", tuple(canon))

    @classmethod
    def lattice(cls, name: str, step: float, offset: float = 0.0) -> "AngleSet":
        return cls(name, step=step, offset=offset)

    @classmethod
    def explicit(cls, name: str, angles) -> "AngleSet":
        return cls(name, angles=tuple(float(a) for a in angles))

    def nearest(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized nearest member.

        Returns ``(nearest, delta)`` where ``nearest`` lies in ``[0, 2*pi)``
        and ``delta`` is the wrapped difference ``theta - nearest``. Ties go
        to the lower of the two candidates.
        """
        theta = np.asarray(theta, dtype=float)
        if self.angles is None:
            x = theta - self.offset
            r = x / self.step
            k = np.floor(r)
            k = np.where(r - k > 0.5, k + 1, k)
            delta = x - k * self.step
            n = int(round(TWO_PI / self.step))
            near = np.mod(np.mod(k, n) * self.step + self.offset, TWO_PI)
            return near, delta
        members = np.asarray(self.angles)
        diff = np.mod(theta[..., None] - members + math.pi, TWO_PI) - math.pi
        # exact half-turn differences count as +pi so ties resolve by member order
        diff = np.where(diff == -math.pi, math.pi, diff)
        idx = np.argmin(np.abs(diff), axis=-1)
        near = members[idx]
        delta = np.take_along_axis(diff, idx[..., None], axis=-1)[..., 0]
        return near, delta

    def contains(self, theta: float, atol: float = 1e-9) -> bool:
        _, delta = self.nearest(theta)
        return bool(abs(delta) <= atol)


CLIFFORD = AngleSet.lattice("clifford", math.pi / 2)
CLIFFORD_T = AngleSet.lattice("clifford_t", math.pi / 4)
EIGHTH = AngleSet.lattice("eighth", math.pi / 8)

ANGLE_SETS = {s.name: s for s in (CLIFFORD, CLIFFORD_T, EIGHTH)}


def rounding_cost(theta: float, d: AngleSet) -> tuple[float, float]:
    """Triangle-wave penalty ``min_phi |theta - phi| / 2`` and its argmin."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    near, delta = d.nearest(theta)
    return abs(float(delta)) / 2, float(near)


@dataclass(frozen=True)
class EpsilonVector:
    """Per-parameter penalties and the ascending order (ties by index)."""

    values: np.ndarray
    nearest: np.ndarray
    delta: np.ndarray
    order: np.ndarray

    def smallest(self, n: int) -> np.ndarray:
        return self.order[:n]

    def sum_smallest(self, n: int) -> float:
        return float(np.sum(self.values[self.order[:n]]))


def epsilon_vector(params, d: AngleSet) -> EpsilonVector:
    theta = np.asarray(params, dtype=float).reshape(-1)
    near, delta = d.nearest(theta)
    values = np.abs(delta) / 2
    order = np.argsort(values, kind="stable")
    return EpsilonVector(values, near, delta, order)


@dataclass(frozen=True)
class ObjectiveConfig:
    target: np.ndarray
    angle_set: AngleSet
    n_round: int = 0
    penalty_factor: float = 1.0

    def __post_init__(self):
        if self.n_round < 0:
            raise ValueError("n_round must be non-negative")
        if not self.penalty_factor > 0:
            raise ValueError("penalty_factor must be positive")

    def with_n(self, n_round: int) -> "ObjectiveConfig":
        return ObjectiveConfig(self.target, self.angle_set, n_round, self.penalty_factor)


def _check(circuit: Circuit, params, config: ObjectiveConfig) -> np.ndarray:
    theta = _as_params(circuit, params)
    target = np.asarray(config.target)
    if target.shape != (circuit.dim, circuit.dim):
        raise ValueError(f"target shape {target.shape} does not match a {circuit.num_qubits}-qubit circuit")
    if config.n_round > circuit.num_params:
        raise ValueError(f"n_round={config.n_round} exceeds {circuit.num_params} parameters")
    return theta


def objective(circuit: Circuit, params, config: ObjectiveConfig) -> tuple[float, float, EpsilonVector]:
    """Distance to target plus the ``n_round`` smallest rounding penalties.

    Returns ``(value, distance_part, epsilon)``.
    """
    theta = _check(circuit, params, config)
    dist = distance(config.target, build_unitary(circuit, theta))
    eps = epsilon_vector(theta, config.angle_set)
    value = dist + config.penalty_factor * eps.sum_smallest(config.n_round)
    return value, dist, eps


def _distance_and_grad(circuit: Circuit, theta: np.ndarray, target: np.ndarray):
    w = target.conj().T
    v, dtr = overlap_with_gradient(circuit, theta, w)
    dim = circuit.dim
    dist = _distance_of_overlap(v)
    c = np.trace(v) / dim
    grad = -np.real(np.conj(c) * dtr / dim) / max(dist, _GRAD_FLOOR)
    return dist, grad


def objective_and_gradient(circuit: Circuit, params, config: ObjectiveConfig):
    """``(value, gradient)`` in one pass; what the local solver calls."""
    theta = _check(circuit, params, config)
    dist, grad = _distance_and_grad(circuit, theta, np.asarray(config.target))
    value = dist
    if config.n_round:
        eps = epsilon_vector(theta, config.angle_set)
        sel = eps.order[: config.n_round]
        value += config.penalty_factor * float(np.sum(eps.values[sel]))
        grad = grad.copy()
        grad[sel] += 0.5 * config.penalty_factor * np.sign(eps.delta[sel])
    return value, grad


def objective_gradient(circuit: Circuit, params, config: ObjectiveConfig) -> np.ndarray:
    return objective_and_gradient(circuit, params, config)[1]


def distance_squared_and_gradient(circuit: Circuit, params, target, free=None):
    """Smooth ``1 - |c|^2`` and its gradient, optionally restricted to ``free`` slots."""
    theta = np.asarray(params, dtype=float)
    target = np.asarray(target)
    w = target.conj().T
    v, dtr = overlap_with_gradient(circuit, theta, w)
    dim = circuit.dim
    dist = _distance_of_overlap(v)
    c = np.trace(v) / dim
    grad = -2.0 * np.real(np.conj(c) * dtr / dim)
    if free is not None:
        grad = grad[free]
    return dist * dist, grad
