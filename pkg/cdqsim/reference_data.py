"""Published gate-count and fidelity rows used as trend references."""

from dataclasses import dataclass
from typing import Optional, Tuple


@dataclass(frozen=True)
class GateCountReference:
    system: str
    with_cd: bool
    trotter_steps: int
    rotations: int
    cnots: Optional[int]
    fidelity: float

    @property
    def total_gates(self) -> int:
        return self.rotations + (self.cnots or 0)


@dataclass(frozen=True)
class OptimizationReference:
    system: str
    optimized: bool
    ideal_fidelity: float
    experiment_fidelity: float
    rotations: int
    cnots: int
    expected_gate_error: float


# Gate counts needed for successful preparation with and without CD terms.
GATE_COUNT_REFERENCE: Tuple[GateCountReference, ...] = (
    GateCountReference("single_spin", True, 2, 7, None, 0.995),
    GateCountReference("ising_chain_5", True, 4, 70, 40, 0.993),
    GateCountReference("bell", True, 3, 27, 14, 0.999),
    GateCountReference("ghz3", True, 4, 111, 60, 0.966),
    GateCountReference("single_spin", False, 20, 39, None, 0.996),
    GateCountReference("ising_chain_5", False, 30, 445, 300, 0.985),
    GateCountReference("bell", False, 24, 70, 48, 0.998),
    GateCountReference("ghz3", False, 18, 105, 108, 0.962),
)

# Device-run fidelities with and without transpiler optimization. The
# expected-error column is not reproducible from average gate fidelities.
OPTIMIZATION_REFERENCE: Tuple[OptimizationReference, ...] = (
    OptimizationReference("bell", True, 0.999, 0.9835, 8, 2, 0.01927),
    OptimizationReference("bell", False, 0.999, 0.8021, 19, 14, 0.11834),
    OptimizationReference("ghz3", True, 0.9325, 0.8198, 20, 7, 0.07063),
    OptimizationReference("ghz3", False, 0.9325, 0.7370, 23, 15, 0.14276),
)


def gate_count_reference(system: str, with_cd: bool) -> GateCountReference:
    for row in GATE_COUNT_REFERENCE:
        if row.system == system and row.with_cd == with_cd:
            return row
    raise KeyError(f"No reference row for {system!r} (with_cd={with_cd})")


# Ideal-simulator fidelities quoted for the entangled-state runs.
IDEAL_FIDELITY_REFERENCE = {"bell": 0.999, "ghz3": 0.935}


def optimization_reference(system: str, optimized: bool) -> OptimizationReference:
    for row in OPTIMIZATION_REFERENCE:
        if row.system == system and row.optimized == optimized:
            return row
    raise KeyError(f"No optimization row for {system!r} (optimized={optimized})")
