"""Reader and writer for the OpenQASM 2 subset used by rzround.

Accepted statements: an optional ``OPENQASM 2.0;`` header, ``include``
lines, exactly one ``qreg``, and the gates ``h x y z s sdg t tdg cx`` and
``rz(expr)``. ``expr`` is a float literal or a rational multiple of ``pi``
such as ``pi/4``, ``-3*pi/8`` or ``3pi/8``. The extension gates ``sqrtt`` and
``sqrttdg`` (phase pi/8 and -pi/8) are read and written as well, since
rounding to the pi/8 lattice produces them.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .circuit import GATE_ARITY, Circuit, Gate

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'

_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_PI_EXPR = re.compile(r"^([+-])?\s*(?:(\d+)\s*\*?\s*)?pi\s*(?:/\s*(\d+))?$")
_FLOAT_EXPR = re.compile(rf"^{_FLOAT}$")
_QREG = re.compile(r"^qreg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_GATE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\(([^()]*)\))?\s+(.+)$")
_QARG = re.compile(r"^([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")


@dataclass(frozen=True)
class SourceDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class QasmError(ValueError):
    def __init__(self, diagnostics: list[SourceDiagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def pi_multiple(sign: int, num: int, den: int) -> float:
    """The float that both the parser and the writer use for ``sign*num*pi/den``."""
    return sign * num * math.pi / den


def parse_angle(expr: str) -> float:
    expr = expr.strip()
    m = _PI_EXPR.match(expr)
    if m:
        sign = -1 if m.group(1) == "-" else 1
        num = int(m.group(2)) if m.group(2) else 1
        den = int(m.group(3)) if m.group(3) else 1
        if den == 0:
            raise ValueError("division by zero")
        return pi_multiple(sign, num, den)
    if _FLOAT_EXPR.match(expr):
        value = float(expr)
        if math.isfinite(value):
            return value
    raise ValueError(f"malformed angle expression {expr!r}")


def _statements(text: str):
    """Yield ``(line, column, statement, terminated)`` with comments stripped."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        pieces = raw.split("//", 1)[0].split(";")
        col = 1
        for i, piece in enumerate(pieces):
            stmt = piece.strip()
            if stmt:
                yield lineno, col + len(piece) - len(piece.lstrip()), stmt, i < len(pieces) - 1
            col += len(piece) + 1


def parse(text: str) -> tuple[Circuit, np.ndarray]:
    """Parse QASM text into a circuit and its Rz angles (in order of appearance).

    Raises:
        QasmError: carrying one diagnostic per problem found.
    """
    diags: list[SourceDiagnostic] = []
    reg: tuple[str, int] | None = None
    gates: list[Gate] = []
    angles: list[float] = []

    def err(line, col, msg):
        diags.append(SourceDiagnostic(line, col, msg))

    for line, col, stmt, terminated in _statements(text):
        if not terminated:
            err(line, col, f"missing ';' after {stmt!r}")
            continue
        if stmt.startswith("OPENQASM") or stmt.startswith("include"):
            continue
        m = _QREG.match(stmt)
        if m:
            if reg is not None:
                err(line, col, "only one qreg is supported")
            elif int(m.group(2)) < 1:
                err(line, col, "qreg needs at least one qubit")
            else:
                reg = (m.group(1), int(m.group(2)))
            continue
        m = _GATE.match(stmt)
        if not m:
            err(line, col, f"cannot parse statement {stmt!r}")
            continue
        name, arg, qargs = m.group(1), m.group(2), m.group(3)
        if name not in GATE_ARITY:
            err(line, col, f"unknown gate {name!r}")
            continue
        if reg is None:
            err(line, col, "gate before qreg declaration")
            continue
        if (name == "rz") != (arg is not None):
            err(line, col, f"gate {name!r} " + ("needs an angle" if name == "rz" else "takes no angle"))
            continue
        qubits = []
        for q in (s.strip() for s in qargs.split(",")):
            qm = _QARG.match(q)
            if not qm or qm.group(1) != reg[0]:
                err(line, col, f"bad qubit argument {q!r}")
                break
            idx = int(qm.group(2))
            if idx >= reg[1]:
                err(line, col, f"qubit index {idx} out of range for {reg[0]}[{reg[1]}]")
                break
            qubits.append(idx)
        else:
            if len(qubits) != GATE_ARITY[name]:
                err(line, col, f"gate {name!r} takes {GATE_ARITY[name]} qubit(s), got {len(qubits)}")
                continue
            if len(set(qubits)) != len(qubits):
                err(line, col, f"gate {name!r} repeats a qubit")
                continue
            if name == "rz":
                try:
                    angles.append(parse_angle(arg))
                except ValueError as e:
                    err(line, col, str(e))
                    continue
                gates.append(Gate("rz", tuple(qubits), len(angles) - 1))
            else:
                gates.append(Gate(name, tuple(qubits)))
    if reg is None and not diags:
        err(1, 1, "no qreg declaration")
    if diags:
        raise QasmError(diags)
    return Circuit(reg[1], gates), np.array(angles, dtype=float)


def format_angle(theta: float) -> str:
    """``k*pi/2^m`` text (m <= 4) when that text parses back to exactly ``theta``, else 17 digits.

    Values merely close to such a multiple print as decimals so that parsing
    the output always reproduces the input bit for bit.
    """
    for m in range(5):
        den = 2**m
        k = round(theta * den / math.pi)
        if abs(theta - k * math.pi / den) <= 1e-12 and (m == 0 or k % 2 == 1):
            if k == 0:
                return "0" if theta == 0.0 else f"{theta:.17g}"
            sign = "-" if k < 0 else ""
            num = "" if abs(k) == 1 else f"{abs(k)}*"
            text = f"{sign}{num}pi" + (f"/{den}" if den > 1 else "")
            return text if parse_angle(text) == theta else f"{theta:.17g}"
    return f"{theta:.17g}"


def emit(circuit: Circuit, params=None) -> str:
    """Canonical text: header, qreg, then one gate per line."""
    theta = np.zeros(0) if params is None else np.asarray(params, dtype=float)
    if theta.size != circuit.num_params:
        raise ValueError(f"expected {circuit.num_params} parameters, got {theta.size}")
    lines = [HEADER + f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        qs = ",".join(f"q[{q}]" for q in g.qubits)
        if g.name == "rz":
            lines.append(f"rz({format_angle(float(theta[g.param]))}) {qs};")
        else:
            lines.append(f"{g.name} {qs};")
    return "\n".join(lines) + "\n"


def read(path) -> tuple[Circuit, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def write(path, circuit: Circuit, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit(circuit, params))
