"""Command-line front end: ``round``, ``optimize`` and ``verify``.

Exit codes: 0 success, 1 threshold not met, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .circuit import MAX_DENSE_QUBITS, build_unitary
from .cost import ANGLE_SETS, distance
from .partition import PartitionPlan, optimize_circuit
from .qasm import QasmError, emit, read
from .tcount import DEFAULT_THRESHOLD, ThresholdConfig, angle_class, t_count, two_phase_round

EXIT_OK, EXIT_THRESHOLD, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunReport:
    """Everything a run reports. Key order in the JSON follows field order."""

    input: str
    mode: str
    success: bool
    threshold: float
    acceptance: str
    angle_set: str
    num_starts: int
    penalty_factor: float
    seed: int
    block_size: int | None = None
    n_cliff_t: int = 0
    n_cliff: int = 0
    n_t: int = 0
    t_before: int = 0
    t_after: int = 0
    rz_before: int = 0
    rz_after: int = 0
    sqrt_t_after: int = 0
    angle_classes: dict = field(default_factory=dict)
    verified_distance: float | None = None
    bound_distance: float | None = None
    leftover_angles: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    message: str = ""
    wall_time: float = 0.0


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def report_json(report: RunReport) -> str:
    data = asdict(report)
    for key in ("verified_distance", "bound_distance"):
        data[key] = _finite(data[key])
    return json.dumps(data, indent=2) + "\n"


def _load(path) -> tuple:
    try:
        return read(path)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: no such file") from exc
    except QasmError as exc:
        raise InputError("\n".join(f"{path}:{d}" for d in exc.diagnostics)) from exc


def _seed(value):
    return int(np.random.SeedSequence().entropy % 2**32) if value is None else value


def _write_outputs(args, text: str, report: RunReport, figures):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(report_json(report), encoding="utf-8")
        if args.figures:
            stem = Path(args.report).with_suffix("")
            for suffix, draw in figures:
                draw(f"{stem}_{suffix}.png")
    print(
        f"{report.mode}: success={report.success} rz {report.rz_before}->{report.rz_after} "
        f"t {report.t_before}->{report.t_after}",
        file=sys.stderr,
    )


def cmd_round(args) -> int:
    start = time.perf_counter()
    circuit, params = _load(args.input)
    if circuit.num_qubits > MAX_DENSE_QUBITS:
        raise InputError(f"{circuit.num_qubits} qubits is too wide for round; use optimize")
    target = None
    if args.target:
        tc, tp = _load(args.target)
        if tc.num_qubits != circuit.num_qubits:
            raise InputError("target and input act on different numbers of qubits")
        target = build_unitary(tc, tp)
    seed = _seed(args.seed)
    angle_set = ANGLE_SETS[args.angle_set]
    cfg = ThresholdConfig(args.threshold, args.acceptance)
    out = two_phase_round(
        circuit, params, cfg, num_starts=args.starts, target=target, angle_set=angle_set,
        rng=np.random.default_rng(seed), penalty_factor=args.penalty_factor,
    )
    text = emit(out.final_circuit, out.residual_params)
    report = RunReport(
        input=str(args.input), mode="round", success=out.success, threshold=args.threshold,
        acceptance=args.acceptance, angle_set=angle_set.name, num_starts=args.starts,
        penalty_factor=args.penalty_factor, seed=seed,
        n_cliff_t=out.n_rounded, n_cliff=out.n_cliff_search, n_t=out.n_t_search,
        t_before=t_count(circuit), t_after=out.n_t_gates,
        rz_before=circuit.num_params, rz_after=out.final_circuit.num_params,
        sqrt_t_after=out.final_circuit.count("sqrtt", "sqrttdg"),
        angle_classes=out.angle_classes(),
        verified_distance=out.verified_distance, bound_distance=out.bound_distance,
        leftover_angles=[float(x) for x in out.residual_params], message=out.message,
    )
    report.wall_time = round(time.perf_counter() - start, 3)
    figures = [
        ("rounding", lambda p: plotting.plot_rounding_cost(angle_set, out.snapped_angles, out.residual_params, p)),
        ("search", lambda p: plotting.plot_search(out.probes_all, out.probes_clifford, p)),
    ]
    _write_outputs(args, text, report, figures)
    return EXIT_OK if out.success else EXIT_THRESHOLD


def cmd_optimize(args) -> int:
    start = time.perf_counter()
    circuit, params = _load(args.input)
    seed = _seed(args.seed)
    angle_set = ANGLE_SETS[args.angle_set]
    try:
        plan = PartitionPlan(
            block_size=args.block_size, threshold=args.threshold, mode=args.acceptance,
            budget_policy=args.budget, num_starts=args.starts, angle_set=angle_set,
            penalty_factor=args.penalty_factor, seed=seed,
        )
        out, out_params, summary, outcomes, blocks = optimize_circuit(circuit, params, plan, args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    classes = {"clifford": 0, "t": 0, "sqrt_t": 0}
    for o in outcomes:
        for a in o.snapped_angles:
            classes[angle_class(a)] += 1
    ok = not summary.flagged and summary.error_bound <= args.threshold
    report = RunReport(
        input=str(args.input), mode="optimize", success=ok, threshold=args.threshold,
        acceptance=args.acceptance, angle_set=angle_set.name, num_starts=args.starts,
        penalty_factor=args.penalty_factor, seed=seed, block_size=args.block_size,
        n_cliff_t=sum(o.n_rounded for o in outcomes),
        n_cliff=sum(o.n_cliff_search for o in outcomes),
        n_t=sum(o.n_t_search for o in outcomes),
        t_before=t_count(circuit), t_after=t_count(out),
        rz_before=circuit.num_params, rz_after=out.num_params,
        sqrt_t_after=out.count("sqrtt", "sqrttdg"), angle_classes=classes,
        verified_distance=summary.error_bound, bound_distance=summary.error_bound,
        leftover_angles=[float(x) for x in out_params],
        blocks=[
            {
                "qubits": list(b.qubits),
                "rz_before": b.circuit.num_params,
                "rz_after": o.leftover_rz,
                "verified_distance": float(o.verified_distance),
                "flagged": not o.success,
            }
            for b, o in zip(blocks, outcomes)
        ],
        message="" if ok else f"flagged blocks: {summary.flagged}",
    )
    report.wall_time = round(time.perf_counter() - start, 3)
    figures = [
        ("blocks", lambda p: plotting.plot_blocks(
            [b["rz_before"] for b in report.blocks], [b["rz_after"] for b in report.blocks], p)),
        ("rounding", lambda p: plotting.plot_rounding_cost(
            angle_set, [a for o in outcomes for a in o.snapped_angles], out_params, p)),
    ]
    _write_outputs(args, emit(out, out_params), report, figures)
    return EXIT_OK if ok else EXIT_THRESHOLD


def cmd_verify(args) -> int:
    a, pa = _load(args.a)
    b, pb = _load(args.b)
    if a.num_qubits != b.num_qubits:
        raise InputError("circuits act on different numbers of qubits")
    if a.num_qubits > MAX_DENSE_QUBITS:
        raise InputError(f"{a.num_qubits} qubits is too wide for a dense check")
    d = distance(build_unitary(a, pa), build_unitary(b, pb))
    print(f"{d:.17g}")
    return EXIT_OK if d <= args.threshold else EXIT_THRESHOLD


def _common(p: argparse.ArgumentParser):
    p.add_argument("input", help="Clifford+Rz circuit in the QASM subset")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--starts", type=int, default=10, help="optimizer starts per solve")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--angle-set", choices=sorted(ANGLE_SETS), default="clifford_t")
    p.add_argument("--penalty-factor", type=float, default=1.0)
    p.add_argument("--acceptance", choices=("direct", "bound"), default="direct")
    p.add_argument("--out", help="write the rounded circuit here instead of stdout")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--figures", action="store_true", help="render PNG figures next to the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rzround", description="Round Rz gates of Clifford+Rz circuits to Clifford and T gates."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("round", help="round one circuit (at most 8 qubits)")
    _common(r)
    r.add_argument("--target", help="QASM circuit whose unitary is the target (default: the input)")
    r.set_defaults(func=cmd_round)
    o = sub.add_parser("optimize", help="partition, round every block, reassemble")
    _common(o)
    o.add_argument("--block-size", type=int, default=3)
    o.add_argument("--budget", choices=("uniform", "fixed"), default="uniform",
                   help="how the threshold is shared between blocks")
    o.add_argument("--workers", type=int, default=1)
    o.set_defaults(func=cmd_optimize)
    v = sub.add_parser("verify", help="print the distance between two circuits")
    v.add_argument("a")
    v.add_argument("b")
    v.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    v.set_defaults(func=cmd_verify)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "figures", False) and not args.report:
        parser.error("--figures needs --report")
    try:
        if getattr(args, "starts", 1) < 1:
            raise InputError("--starts must be at least 1")
        if not 0 < args.threshold <= 1:
            raise InputError("--threshold must lie in (0, 1]")
        if getattr(args, "penalty_factor", 1.0) <= 0:
            raise InputError("--penalty-factor must be positive")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
