"""Round Rz angles of Clifford+Rz circuits to Clifford and T gates by numerical re-optimization."""
from .circuit import Circuit, Gate, build_gradient, build_unitary, circuit_from_ops
from .cost import (
    ANGLE_SETS,
    CLIFFORD,
    CLIFFORD_T,
    EIGHTH,
    AngleSet,
    ObjectiveConfig,
    distance,
    objective,
    objective_gradient,
    rounding_cost,
)
from .optimize import SeedPool, minimize, multistart, two_step
from .partition import PartitionPlan, flatten, optimize_circuit, partition, reassemble
from .qasm import QasmError, SourceDiagnostic, emit, parse
from .tcount import ThresholdConfig, max_roundable, snap, t_count, two_phase_round

__all__ = [
    "ANGLE_SETS",
    "CLIFFORD",
    "CLIFFORD_T",
    "EIGHTH",
    "AngleSet",
    "Circuit",
    "Gate",
    "ObjectiveConfig",
    "PartitionPlan",
    "QasmError",
    "SeedPool",
    "SourceDiagnostic",
    "ThresholdConfig",
    "build_gradient",
    "build_unitary",
    "circuit_from_ops",
    "distance",
    "emit",
    "flatten",
    "max_roundable",
    "minimize",
    "multistart",
    "objective",
    "objective_gradient",
    "optimize_circuit",
    "parse",
    "partition",
    "reassemble",
    "rounding_cost",
    "snap",
    "t_count",
    "two_phase_round",
    "two_step",
]
