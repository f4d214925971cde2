"""
State-vector evolution.

Digitized evolution applies a first-order Trotter plan: for steps j = 1..n the
coefficients are sampled at t_j = j dt (or the step midpoint) and every Pauli
term is exponentiated exactly as exp(-i theta P) = cos(theta) - i sin(theta) P.
``exact_evolve`` is the continuous-time oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from utils.config import get_config
from cdqsim.cd_drivers import CDTerm
from cdqsim.errors import ConfigError, ConvergenceError, DimensionError, NumericalError
from cdqsim.models import AnnealingProblem, ground_manifold_overlap
from cdqsim.pauli_core import PauliString, PauliSum, to_dense
from cdqsim.states import StateVector, basis_index

logger = logging.getLogger(__name__)

__all__ = [
    "StateVector",
    "PlanEntry",
    "TrotterStep",
    "TrotterPlan",
    "StepRecord",
    "EvolutionResult",
    "apply_pauli_rotation",
    "build_plan",
    "reverse_plan",
    "run_plan",
    "trotter_evolve",
    "exact_evolve",
    "expectation",
    "fidelity",
    "ground_probability",
    "density_matrix",
    "mixed_state_fidelity",
    "bloch_vector",
]

BLOCKS = ("x", "z", "zz", "cd")
DEFAULT_ORDER = ("x", "cd", "z", "zz")
SAMPLINGS = ("endpoint", "midpoint")


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """exp(-i theta P)|psi>."""
    if p.n_qubits != state.n_qubits:
        raise DimensionError(
            f"Pauli string on {p.n_qubits} qubits, state on {state.n_qubits}"
        )
    if theta == 0.0:
        return state
    return StateVector(_rotate(state.amplitudes, p, theta))


def _rotate(amplitudes: np.ndarray, p: PauliString, theta: float) -> np.ndarray:
    return math.cos(theta) * amplitudes - 1j * math.sin(theta) * p.apply(amplitudes)


# -- plans ------------------------------------------------------------------


@dataclass(frozen=True)
class PlanEntry:
    string: PauliString
    angle: float
    block: str


@dataclass(frozen=True)
class TrotterStep:
    index: int
    t: float
    lam: float
    lam_dot: float
    entries: Tuple[PlanEntry, ...]


@dataclass(frozen=True)
class TrotterPlan:
    """Ordered exp(-i angle P) factors grouped by Trotter step."""

    n_qubits: int
    dt: float
    steps: Tuple[TrotterStep, ...]
    order: Tuple[str, ...] = DEFAULT_ORDER
    sampling: str = "endpoint"

    def __post_init__(self):
        for step in self.steps:
            for entry in step.entries:
                if not math.isfinite(entry.angle):
                    raise NumericalError(
                        f"Non-finite angle on {entry.string.label} at step {step.index}"
                    )

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def entries(self) -> List[PlanEntry]:
        return [entry for step in self.steps for entry in step.entries]

    def max_weight(self) -> int:
        return max((e.string.weight for e in self.entries()), default=0)


def _classify(string: PauliString, from_initial: bool) -> str:
    if from_initial:
        return "x"
    return "z" if string.weight == 1 else "zz"


def build_plan(
    problem: AnnealingProblem,
    cd: Optional[CDTerm] = None,
    order: Sequence[str] = DEFAULT_ORDER,
    sampling: str = "endpoint",
) -> TrotterPlan:
    """First-order Trotter plan; X, Z, ZZ and CD blocks in ``order`` each step."""
    order = tuple(order)
    if sorted(order) != sorted(BLOCKS):
        raise ConfigError(f"Term order must be a permutation of {BLOCKS}, got {order}")
    if sampling not in SAMPLINGS:
        raise ConfigError(f"sampling must be one of {SAMPLINGS}, got {sampling!r}")
    if cd is not None and cd.n_qubits != problem.n_qubits:
        raise DimensionError(
            f"CD term on {cd.n_qubits} qubits, problem on {problem.n_qubits}"
        )

    dt = problem.total_time / problem.n_steps
    schedule = problem.schedule
    initial_terms = [(s, c.real, _classify(s, True)) for s, c in problem.h_i]
    final_terms = [(s, c.real, _classify(s, False)) for s, c in problem.h_f]

    steps = []
    for j in range(1, problem.n_steps + 1):
        t = problem.step_time(j) if sampling == "endpoint" else (j - 0.5) * dt
        lam = schedule.lam(t)
        lam_dot = schedule.lam_dot(t)
        blocks = {name: [] for name in BLOCKS}
        for string, coeff, block in initial_terms:
            blocks[block].append(PlanEntry(string, dt * (1.0 - lam) * coeff, block))
        for string, coeff, block in final_terms:
            blocks[block].append(PlanEntry(string, dt * lam * coeff, block))
        if cd is not None:
            for string, coeff in cd.evaluate(lam, lam_dot):
                blocks["cd"].append(PlanEntry(string, dt * coeff.real, "cd"))
        entries = tuple(
            entry
            for name in order
            for entry in blocks[name]
            if entry.angle != 0.0
        )
        steps.append(TrotterStep(j, t, lam, lam_dot, entries))
    return TrotterPlan(problem.n_qubits, dt, tuple(steps), order, sampling)


def reverse_plan(plan: TrotterPlan) -> TrotterPlan:
    """Inverse plan: steps and entries reversed with negated angles."""
    steps = tuple(
        TrotterStep(
            step.index,
            step.t,
            step.lam,
            step.lam_dot,
            tuple(PlanEntry(e.string, -e.angle, e.block) for e in reversed(step.entries)),
        )
        for step in reversed(plan.steps)
    )
    return TrotterPlan(plan.n_qubits, plan.dt, steps, plan.order, plan.sampling)


def run_plan(plan: TrotterPlan, initial: StateVector) -> StateVector:
    if plan.n_qubits != initial.n_qubits:
        raise DimensionError(
            f"Plan on {plan.n_qubits} qubits, state on {initial.n_qubits}"
        )
    amplitudes = np.array(initial.amplitudes)
    for entry in plan.entries():
        amplitudes = _rotate(amplitudes, entry.string, entry.angle)
    return StateVector(amplitudes)


# -- observables ------------------------------------------------------------


def fidelity(state: StateVector, target: StateVector) -> float:
    """|<target|state>|^2."""
    if state.n_qubits != target.n_qubits:
        raise DimensionError(
            f"Fidelity between {state.n_qubits}- and {target.n_qubits}-qubit states"
        )
    value = abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2
    return float(min(max(value, 0.0), 1.0))


def ground_probability(state: StateVector, basis_label: str) -> float:
    """|<label|psi>|^2 for a computational-basis bitstring."""
    index = basis_index(basis_label, state.n_qubits)
    return float(abs(state.amplitudes[index]) ** 2)


def support_probability(state: StateVector, labels: Sequence[str]) -> float:
    return float(min(1.0, sum(ground_probability(state, b) for b in labels)))


def density_matrix(state: StateVector) -> np.ndarray:
    """|psi><psi|."""
    limit = 10
    if state.n_qubits > limit:
        raise DimensionError(
            f"Density matrix limited to {limit} qubits, got {state.n_qubits}"
        )
    return np.outer(state.amplitudes, state.amplitudes.conj())


def mixed_state_fidelity(state: StateVector, rho: np.ndarray) -> float:
    """<psi|rho|psi>, the pure-vs-mixed fidelity."""
    if rho.shape != (state.dim, state.dim):
        raise DimensionError(f"rho of shape {rho.shape} vs state dimension {state.dim}")
    return float(np.vdot(state.amplitudes, rho @ state.amplitudes).real)


def expectation(state: StateVector, h: PauliSum) -> float:
    """<psi|H|psi> for a Hermitian sum."""
    return state.expectation(h)


def bloch_vector(state: StateVector) -> Tuple[float, float, float]:
    if state.n_qubits != 1:
        raise DimensionError("Bloch vector is defined for one qubit")
    return tuple(
        state.expectation(PauliSum.from_labels([(letter, 1.0)])) for letter in "XYZ"
    )


# -- digitized evolution ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepRecord:
    step: int
    t: float
    lam: float
    p_gs: float
    fidelity: float
    state: Optional[StateVector] = None

    def as_row(self) -> List[float]:
        return [self.step, self.t, self.lam, self.p_gs, self.fidelity]


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    problem_name: str
    method: str
    records: Tuple[StepRecord, ...]
    final_state: StateVector
    ground_overlap: Optional[float] = None
    plan: Optional[TrotterPlan] = field(default=None, repr=False)

    @property
    def final_p_gs(self) -> float:
        return self.records[-1].p_gs if self.records else float("nan")

    @property
    def final_fidelity(self) -> float:
        return self.records[-1].fidelity if self.records else float("nan")


def _record(problem, step, t, lam, state, snapshots) -> StepRecord:
    return StepRecord(
        step=step,
        t=t,
        lam=lam,
        p_gs=support_probability(state, problem.target_support),
        fidelity=fidelity(state, problem.target_state),
        state=state if snapshots else None,
    )


def trotter_evolve(
    problem: AnnealingProblem,
    cd: Optional[CDTerm] = None,
    record: bool = True,
    snapshots: bool = False,
    order: Sequence[str] = DEFAULT_ORDER,
    sampling: str = "endpoint",
) -> EvolutionResult:
    """Apply the plan step by step, recording observables after each full step."""
    settings = get_config()
    if snapshots and problem.n_qubits > settings.SNAPSHOT_QUBIT_LIMIT:
        logger.warning(
            f"State snapshots disabled above {settings.SNAPSHOT_QUBIT_LIMIT} qubits"
        )
        snapshots = False
    plan = build_plan(problem, cd, order=order, sampling=sampling)
    state = problem.initial_state
    records = []
    if record:
        records.append(_record(problem, 0, 0.0, 0.0, state, snapshots))
    for step in plan.steps:
        amplitudes = np.array(state.amplitudes)
        for entry in step.entries:
            amplitudes = _rotate(amplitudes, entry.string, entry.angle)
        state = StateVector(amplitudes)
        t_end = problem.step_time(step.index)
        if record:
            records.append(
                _record(problem, step.index, t_end, problem.schedule.lam(t_end), state, snapshots)
            )
    if not record:
        t_end = problem.total_time
        records.append(_record(problem, plan.n_steps, t_end, 1.0, state, snapshots))

    overlap = None
    if problem.n_qubits <= settings.DENSE_QUBIT_LIMIT:
        overlap = ground_manifold_overlap(state, problem.h_f)
    method = cd.label if cd is not None else "none"
    logger.debug(
        f"{problem.name} [{method}] n={plan.n_steps}: P_gs={records[-1].p_gs:.6f}, "
        f"F={records[-1].fidelity:.6f}"
    )
    return EvolutionResult(problem.name, method, tuple(records), state, overlap, plan)


# -- exact oracle -----------------------------------------------------------

# fourth-order commutator-free exponential integrator (two Gauss nodes)
_GAUSS_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
_CF4_WEIGHTS = (0.25 + math.sqrt(3.0) / 6.0, 0.25 - math.sqrt(3.0) / 6.0)


def _dense_hamiltonian(problem, cd, h_i, h_f, t):
    schedule = problem.schedule
    lam = schedule.lam(t)
    h = (1.0 - lam) * h_i + lam * h_f
    if cd is not None:
        lam_dot = schedule.lam_dot(t)
        if lam_dot != 0.0:
            h = h + to_dense(cd.evaluate(lam, lam_dot))
    return h


def _propagate(problem, cd, h_i, h_f, slices: int) -> np.ndarray:
    width = problem.total_time / slices
    w1, w2 = _CF4_WEIGHTS
    psi = np.array(problem.initial_state.amplitudes)
    for s in range(slices):
        t0 = s * width
        h1 = _dense_hamiltonian(problem, cd, h_i, h_f, t0 + _GAUSS_NODES[0] * width)
        h2 = _dense_hamiltonian(problem, cd, h_i, h_f, t0 + _GAUSS_NODES[1] * width)
        psi = linalg.expm(-1j * width * (w1 * h1 + w2 * h2)) @ psi
        psi = linalg.expm(-1j * width * (w2 * h1 + w1 * h2)) @ psi
    return psi


def exact_evolve(
    problem: AnnealingProblem,
    cd: Optional[CDTerm] = None,
    tol: float = 1e-8,
    max_halvings: int = 6,
) -> StateVector:
    """Time-ordered dense propagation, refined by slice halving until converged."""
    limit = 10
    if problem.n_qubits > limit:
        raise DimensionError(
            f"Exact evolution limited to {limit} qubits, got {problem.n_qubits}"
        )
    h_i = to_dense(problem.h_i)
    h_f = to_dense(problem.h_f)
    slices = max(1, math.ceil(100 * problem.n_steps))
    previous = _propagate(problem, cd, h_i, h_f, slices)
    change = float("inf")
    for _ in range(max_halvings):
        slices *= 2
        current = _propagate(problem, cd, h_i, h_f, slices)
        change = float(np.linalg.norm(current - previous))
        previous = current
        if change < tol:
            logger.debug(f"Exact evolution converged with {slices} slices ({change:.2e})")
            return StateVector.normalized(current)
    raise ConvergenceError(
        f"Exact evolution of {problem.name} did not converge", change, tol
    )
