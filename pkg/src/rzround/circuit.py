"""Circuit IR for Clifford+T+Rz circuits and dense unitary construction.

Qubit 0 is the most significant bit of a basis-state index, so ``cx`` with
control 0 and target 1 on two qubits is the textbook permutation matrix.
Gate 0 in a circuit acts first: ``U = G[L-1] @ ... @ G[0]``.

Rz follows ``diag(exp(-i theta/2), exp(+i theta/2))``. Under this convention
``t``, ``s`` and ``z`` equal ``rz(pi/4)``, ``rz(pi/2)`` and ``rz(pi)`` up to a
global phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

MAX_DENSE_QUBITS = 8

_SQ2 = 1 / math.sqrt(2)


def _phase(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)]).astype(complex)


GATE_MATRICES: dict[str, np.ndarray] = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
    "s": _phase(math.pi / 2),
    "sdg": _phase(-math.pi / 2),
    "t": _phase(math.pi / 4),
    "tdg": _phase(-math.pi / 4),
    # sqrt(T); only produced when snapping to the pi/8 lattice
    "sqrtt": _phase(math.pi / 8),
    "sqrttdg": _phase(-math.pi / 8),
    "cx": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

GATE_ARITY: dict[str, int] = {name: int(round(math.log2(m.shape[0]))) for name, m in GATE_MATRICES.items()}
GATE_ARITY["rz"] = 1

CLIFFORD_GATES = frozenset({"h", "x", "y", "z", "s", "sdg", "cx"})
T_GATES = frozenset({"t", "tdg"})
SQRT_T_GATES = frozenset({"sqrtt", "sqrttdg"})


@dataclass(frozen=True)
class Gate:
    """One gate placement. ``param`` is the parameter slot of an ``rz``."""

    name: str
    qubits: tuple[int, ...]
    param: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.name not in GATE_ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        if len(self.qubits) != GATE_ARITY[self.name]:
            raise ValueError(
                f"gate {self.name!r} takes {GATE_ARITY[self.name]} qubit(s), got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"gate {self.name!r} has repeated qubits {self.qubits}")
        if (self.name == "rz") != (self.param is not None):
            raise ValueError("exactly the rz gates carry a parameter index")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``num_qubits`` qubits.

    Parameter slots of the ``rz`` gates must be exactly ``0..M-1``, each used
    once. Instances are immutable; the compiled form used by
    :func:`build_unitary` is cached on first use.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise ValueError(f"{g} acts outside {self.num_qubits} qubits")
        slots = sorted(g.param for g in self.gates if g.param is not None)
        if slots != list(range(len(slots))):
            raise ValueError("rz parameter indices must be exactly 0..M-1, each used once")

    @property
    def num_params(self) -> int:
        return sum(1 for g in self.gates if g.name == "rz")

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def count(self, *names: str) -> int:
        return sum(1 for g in self.gates if g.name in names)

    def rz_qubits(self) -> list[int]:
        """Qubit of each parameter slot, indexed by slot."""
        out = [0] * self.num_params
        for g in self.gates:
            if g.param is not None:
                out[g.param] = g.qubits[0]
        return out

    @cached_property
    def _compiled(self) -> "_Compiled":
        return _compile(self)


def circuit_from_ops(num_qubits: int, ops: Iterable[Sequence]) -> Circuit:
    """Build a circuit from ``(name, qubits)`` tuples; rz slots are numbered in order.

    >>> circuit_from_ops(2, [("h", [0]), ("rz", [1]), ("cx", [0, 1])]).num_params
    1
    """
    gates = []
    slot = 0
    for name, qubits in ops:
        if isinstance(qubits, int):
            qubits = (qubits,)
        if name == "rz":
            gates.append(Gate("rz", tuple(qubits), slot))
            slot += 1
        else:
            gates.append(Gate(name, tuple(qubits)))
    return Circuit(num_qubits, tuple(gates))


def apply_gate(mat: np.ndarray, gate: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    """Return ``embed(gate) @ mat`` without forming the embedded gate."""
    k = len(qubits)
    cols = mat.shape[1]
    t = mat.reshape((2,) * num_qubits + (cols,))
    g = gate.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(qubits)))
    # tensordot puts the gate's output axes first; move them back into place
    t = np.moveaxis(t, list(range(k)), list(qubits))
    return t.reshape(mat.shape)


def embed(gate: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    return apply_gate(np.eye(2**num_qubits, dtype=complex), gate, qubits, num_qubits)


def rz_matrix(theta: float) -> np.ndarray:
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"rz angle must be finite, got {theta}")
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass
class _Compiled:
    # U = fixed[M] D[M-1] fixed[M-1] ... D[0] fixed[0]; None marks an identity segment
    fixed: list[np.ndarray | None]
    signs: list[np.ndarray]
    slots: list[int]


def _compile(circuit: Circuit) -> _Compiled:
    n, dim = circuit.num_qubits, circuit.dim
    fixed: list[np.ndarray | None] = []
    signs, slots = [], []
    seg = None
    for g in circuit.gates:
        if g.name == "rz":
            fixed.append(seg)
            seg = None
            q = g.qubits[0]
            bit = (np.arange(dim) >> (n - 1 - q)) & 1
            signs.append(np.where(bit == 1, 1.0, -1.0))
            slots.append(g.param)
        else:
            if seg is None:
                seg = np.eye(dim, dtype=complex)
            seg = apply_gate(seg, GATE_MATRICES[g.name], g.qubits, n)
    fixed.append(seg)
    return _Compiled(fixed, signs, slots)


def _as_params(circuit: Circuit, params) -> np.ndarray:
    theta = np.asarray(params if params is not None else [], dtype=float).reshape(-1)
    if theta.shape[0] != circuit.num_params:
        raise ValueError(f"expected {circuit.num_params} parameters, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameters must be finite")
    return theta


def _lmul(f, u):
    return u if f is None else f @ u


def build_unitary(circuit: Circuit, params=None) -> np.ndarray:
    """Dense unitary of ``circuit`` at ``params``."""
    theta = _as_params(circuit, params)
    comp = circuit._compiled
    u = np.eye(circuit.dim, dtype=complex) if comp.fixed[0] is None else comp.fixed[0].copy()
    for k, (sign, slot) in enumerate(zip(comp.signs, comp.slots)):
        u = np.exp(0.5j * theta[slot] * sign)[:, None] * u
        u = _lmul(comp.fixed[k + 1], u)
    return u


def _prefixes(comp: _Compiled, theta: np.ndarray, dim: int):
    """Products of everything before each Rz, plus the diagonal of each Rz."""
    cur = np.eye(dim, dtype=complex) if comp.fixed[0] is None else comp.fixed[0]
    pre, diags = [], []
    for k, (sign, slot) in enumerate(zip(comp.signs, comp.slots)):
        pre.append(cur)
        d = np.exp(0.5j * theta[slot] * sign)
        diags.append(d)
        cur = _lmul(comp.fixed[k + 1], d[:, None] * cur)
    return pre, diags, cur


def build_gradient(circuit: Circuit, params=None) -> list[np.ndarray]:
    """Analytic ``dU/dtheta_i`` for every parameter slot ``i``."""
    theta = _as_params(circuit, params)
    comp = circuit._compiled
    m, dim = len(comp.slots), circuit.dim
    if m == 0:
        return []
    pre, diags, _ = _prefixes(comp, theta, dim)
    grads: list[np.ndarray] = [None] * m  # type: ignore[list-item]
    post = np.eye(dim, dtype=complex) if comp.fixed[m] is None else comp.fixed[m]
    for k in range(m - 1, -1, -1):
        dd = 0.5j * comp.signs[k] * diags[k]
        grads[comp.slots[k]] = post @ (dd[:, None] * pre[k])
        post = post * diags[k][None, :]
        if comp.fixed[k] is not None:
            post = post @ comp.fixed[k]
    return grads


def overlap_with_gradient(circuit: Circuit, params, weight: np.ndarray):
    """Return ``(W @ U, [Tr(W dU/dtheta_i)])`` for a fixed matrix ``W``.

    Cheaper than :func:`build_gradient` because only diagonals of the
    sandwiched products are needed.
    """
    theta = _as_params(circuit, params)
    comp = circuit._compiled
    m, dim = len(comp.slots), circuit.dim
    pre, diags, u = _prefixes(comp, theta, dim)
    dtr = np.zeros(m, dtype=complex)
    wpost = weight if comp.fixed[m] is None else weight @ comp.fixed[m]
    for k in range(m - 1, -1, -1):
        # Tr(W P dD Q) = sum_j dD_j (Q W P)_jj
        qwp = np.einsum("ij,ji->i", pre[k], wpost)
        dtr[comp.slots[k]] = np.sum(0.5j * comp.signs[k] * diags[k] * qwp)
        wpost = wpost * diags[k][None, :]
        if comp.fixed[k] is not None:
            wpost = wpost @ comp.fixed[k]
    return weight @ u, dtr


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol)
