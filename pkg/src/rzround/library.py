"""Clifford+Rz benchmark circuits used by the tests and the CLI examples."""
from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit, circuit_from_ops

PI = math.pi


def controlled_phase(a: int, b: int, phi: float):
    """Ops and angles for ``diag(1, 1, 1, e^{i phi})`` on qubits ``(a, b)``.

    Uses ``phi*x_a*x_b = phi/2 * (x_a + x_b - x_a^x_b)``, i.e. three Rz.
    """
    ops = [("rz", a), ("rz", b), ("cx", (a, b)), ("rz", b), ("cx", (a, b))]
    return ops, [phi / 2, phi / 2, -phi / 2]


def toffoli_ansatz() -> tuple[Circuit, np.ndarray]:
    """The standard 7-T Toffoli with every T/Tdg written as an Rz(+-pi/4)."""
    a, b, c = 0, 1, 2
    q = PI / 4
    seq = [
        ("h", c, None), ("cx", (b, c), None), ("rz", c, -q), ("cx", (a, c), None),
        ("rz", c, q), ("cx", (b, c), None), ("rz", c, -q), ("cx", (a, c), None),
        ("rz", b, q), ("rz", c, q), ("h", c, None), ("cx", (a, b), None),
        ("rz", a, q), ("rz", b, -q), ("cx", (a, b), None),
    ]
    circuit = circuit_from_ops(3, [(name, qs) for name, qs, _ in seq])
    params = np.array([ang for name, _, ang in seq if name == "rz"])
    return circuit, params


def toffoli_matrix() -> np.ndarray:
    u = np.eye(8, dtype=complex)
    u[[6, 7]] = u[[7, 6]]
    return u


def qft_ansatz(num_qubits: int, swaps: bool = True) -> tuple[Circuit, np.ndarray]:
    """Textbook QFT: H plus controlled-phase ladders, each phase as three Rz."""
    ops, params = [], []
    for j in range(num_qubits):
        ops.append(("h", j))
        for k in range(j + 1, num_qubits):
            cp_ops, cp_angles = controlled_phase(k, j, PI / 2 ** (k - j))
            ops += cp_ops
            params += cp_angles
    if swaps:
        for j in range(num_qubits // 2):
            a, b = j, num_qubits - 1 - j
            ops += [("cx", (a, b)), ("cx", (b, a)), ("cx", (a, b))]
    return circuit_from_ops(num_qubits, ops), np.array(params)


def qft_matrix(num_qubits: int) -> np.ndarray:
    dim = 2**num_qubits
    jk = np.outer(np.arange(dim), np.arange(dim))
    return np.exp(2j * PI * jk / dim) / math.sqrt(dim)


def planted_ladder(
    num_qubits: int = 8,
    layers: int = 2,
    snappable_fraction: float = 0.5,
    noise: float = 1e-6,
    seed: int = 0,
) -> tuple[Circuit, np.ndarray, np.ndarray]:
    """Controlled-phase ladder with planted near-lattice angles.

    Every nearest-neighbour controlled phase is followed by Hadamards on both
    qubits, so no two Rz gates share a phase term and only the planted
    angles (multiples of pi/4 plus ``+-noise``) can be rounded away. Generic
    angles stay at least 0.15 rad from the pi/4 lattice.

    Returns ``(circuit, params, planted)`` where ``planted`` flags each slot.
    """
    rng = np.random.default_rng(seed)
    ops = [("h", q) for q in range(num_qubits)]
    count = 0
    for _ in range(layers):
        for q in range(num_qubits - 1):
            cp_ops, _ = controlled_phase(q, q + 1, 0.0)
            ops += cp_ops + [("h", q), ("h", q + 1)]
            count += 3
    n_planted = int(round(snappable_fraction * count))
    planted = np.zeros(count, dtype=bool)
    planted[rng.permutation(count)[:n_planted]] = True
    params = np.empty(count)
    for i in range(count):
        k = rng.integers(0, 8)
        if planted[i]:
            params[i] = k * PI / 4 + rng.choice([-1.0, 1.0]) * noise
        else:
            params[i] = k * PI / 4 + rng.uniform(0.15, PI / 4 - 0.15)
    params = np.mod(params + PI, 2 * PI) - PI
    return circuit_from_ops(num_qubits, ops), params, planted
