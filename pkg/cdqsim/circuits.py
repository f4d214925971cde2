"""
Circuit compilation for Trotter plans.

Rotation convention: R_A(phi) = exp(-i phi A / 2), so a plan factor
exp(-i theta P) becomes a rotation with parameter 2 theta. Two-qubit strings
are rotated to ZZ with single-qubit basis changes and realized as
CNOT, RZ(2 theta), CNOT.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils.config import get_config
from cdqsim.cd_drivers import make_cd_term
from cdqsim.errors import ConfigError, DimensionError, UnsupportedTermError
from cdqsim.evolution import DEFAULT_ORDER, TrotterPlan, trotter_evolve
from cdqsim.models import AnnealingProblem
from cdqsim.pauli_core import PauliString
from cdqsim.states import StateVector

logger = logging.getLogger(__name__)

ROTATIONS = ("rx", "ry", "rz")
SINGLE_QUBIT = ROTATIONS + ("h",)
ZERO_ANGLE = 1e-12
_MAX_PASSES = 50


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind in ROTATIONS:
            if len(self.qubits) != 1 or self.angle is None:
                raise ValueError(f"{self.kind} needs one qubit and an angle")
            if not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} angle must be finite")
        elif self.kind == "h":
            if len(self.qubits) != 1:
                raise ValueError("h acts on one qubit")
        elif self.kind == "cx":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("cx needs distinct control and target")
        else:
            raise ValueError(f"Unknown gate kind {self.kind!r}")

    @property
    def is_single(self) -> bool:
        return self.kind in SINGLE_QUBIT

    def __str__(self) -> str:
        if self.kind == "cx":
            return f"cx q[{self.qubits[0]}],q[{self.qubits[1]}]"
        if self.kind == "h":
            return f"h q[{self.qubits[0]}]"
        return f"{self.kind}({self.angle!r}) q[{self.qubits[0]}]"


def rx(qubit: int, angle: float) -> Gate:
    return Gate("rx", (qubit,), float(angle))


def ry(qubit: int, angle: float) -> Gate:
    return Gate("ry", (qubit,), float(angle))


def rz(qubit: int, angle: float) -> Gate:
    return Gate("rz", (qubit,), float(angle))


def h(qubit: int) -> Gate:
    return Gate("h", (qubit,))


def cx(control: int, target: int) -> Gate:
    return Gate("cx", (control, target))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in gate.qubits):
                raise DimensionError(
                    f"Gate {gate} addresses a qubit outside 0..{self.n_qubits - 1}"
                )

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.n_qubits != other.n_qubits:
            raise DimensionError("Cannot concatenate circuits on different registers")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def count(self, *kinds: str) -> int:
        return sum(1 for g in self.gates if g.kind in kinds)

    @property
    def rotation_count(self) -> int:
        return self.count(*SINGLE_QUBIT)

    @property
    def cnot_count(self) -> int:
        return self.count("cx")


# -- compilation ------------------------------------------------------------

_BASIS_CHANGE = {
    "X": (lambda q: ry(q, -math.pi / 2), lambda q: ry(q, math.pi / 2)),
    "Y": (lambda q: rx(q, math.pi / 2), lambda q: rx(q, -math.pi / 2)),
}
_AXIS = {"X": "rx", "Y": "ry", "Z": "rz"}


def decompose_term(string: PauliString, theta: float) -> List[Gate]:
    """Gates realizing exp(-i theta P) up to global phase."""
    if abs(theta) < ZERO_ANGLE or string.is_identity:
        return []
    support = string.support
    if len(support) == 1:
        q = support[0]
        return [Gate(_AXIS[string.letter(q)], (q,), 2.0 * theta)]
    if len(support) != 2:
        raise UnsupportedTermError(string.label)
    j, k = support
    lj, lk = string.letter(j), string.letter(k)
    # non-Z letter on the target lets its RX basis change commute with the CNOT
    if lk != "Z" or lj == "Z":
        control, target = j, k
    else:
        control, target = k, j
    pre, post = [], []
    for q, letter in ((j, lj), (k, lk)):
        if letter in _BASIS_CHANGE:
            before, after = _BASIS_CHANGE[letter]
            pre.append(before(q))
            post.append(after(q))
    return pre + [cx(control, target), rz(target, 2.0 * theta), cx(control, target)] + post


def compile_plan(plan: TrotterPlan, prepend: Optional[Circuit] = None) -> Circuit:
    """Concatenate decompositions of every plan factor in order."""
    gates: List[Gate] = list(prepend.gates) if prepend is not None else []
    for entry in plan.entries():
        gates.extend(decompose_term(entry.string, entry.angle))
    return Circuit(plan.n_qubits, tuple(gates))


def preparation_circuit(label: str) -> Circuit:
    """Prepare a product state from |0...0> (labels 0, 1, +, -)."""
    gates = []
    for q, char in enumerate(label):
        if char == "1":
            gates.append(rx(q, math.pi))
        elif char == "+":
            gates.append(h(q))
        elif char == "-":
            gates.append(ry(q, -math.pi / 2))
        elif char != "0":
            raise ValueError(f"Cannot prepare state label character {char!r}")
    return Circuit(len(label), tuple(gates))


# -- peephole optimization --------------------------------------------------


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]; shifts by 2 pi only change the global phase."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def _mergeable(a: Gate, b: Gate) -> bool:
    return a.kind == b.kind and a.qubits == b.qubits


def _commutes(a: Gate, b: Gate) -> bool:
    if not set(a.qubits) & set(b.qubits):
        return True
    if a.is_single and b.is_single:
        return a.kind == b.kind and a.kind != "h"
    if a.kind == "cx" and b.kind == "cx":
        return a.qubits[0] != b.qubits[1] and a.qubits[1] != b.qubits[0]
    single, cnot = (a, b) if a.is_single else (b, a)
    q = single.qubits[0]
    if single.kind == "rz":
        return q == cnot.qubits[0]
    if single.kind == "rx":
        return q == cnot.qubits[1]
    return False


def _optimize_pass(gates: Iterable[Gate]) -> List[Gate]:
    out: List[Optional[Gate]] = []
    for gate in gates:
        if gate.kind in ROTATIONS and abs(_wrap(gate.angle)) < ZERO_ANGLE:
            continue
        placed = False
        for idx in range(len(out) - 1, -1, -1):
            prior = out[idx]
            if prior is None:
                continue
            if _mergeable(prior, gate):
                if gate.kind in ROTATIONS:
                    angle = _wrap(prior.angle + gate.angle)
                    out[idx] = None if abs(angle) < ZERO_ANGLE else Gate(
                        gate.kind, gate.qubits, angle
                    )
                else:
                    out[idx] = None
                placed = True
                break
            if not _commutes(prior, gate):
                break
        if not placed:
            out.append(gate)
    return [g for g in out if g is not None]


def optimize(circuit: Circuit) -> Circuit:
    """Commutation-aware rotation merging and CNOT/H cancellation to a fixed point."""
    gates = list(circuit.gates)
    for _ in range(_MAX_PASSES):
        reduced = _optimize_pass(gates)
        if reduced == gates:
            break
        gates = reduced
    else:
        logger.warning("Circuit optimization stopped before reaching a fixed point")
    logger.debug(f"Optimized circuit: {len(circuit)} -> {len(gates)} gates")
    return Circuit(circuit.n_qubits, tuple(gates))


# -- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class GateStats:
    rotations: int
    cnots: int
    expected_error: float
    eps_rot: float
    eps_cnot: float

    @property
    def total(self) -> int:
        return self.rotations + self.cnots


def gate_stats(
    circuit: Circuit, eps_rot: Optional[float] = None, eps_cnot: Optional[float] = None
) -> GateStats:
    """Counts and 1 - (1 - eps_rot)^rotations (1 - eps_cnot)^cnots."""
    settings = get_config()
    eps_rot = settings.EPS_ROTATION if eps_rot is None else eps_rot
    eps_cnot = settings.EPS_CNOT if eps_cnot is None else eps_cnot
    for name, value in (("eps_rot", eps_rot), ("eps_cnot", eps_cnot)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    rotations = circuit.rotation_count
    cnots = circuit.cnot_count
    survival = (1.0 - eps_rot) ** rotations * (1.0 - eps_cnot) ** cnots
    return GateStats(rotations, cnots, 1.0 - survival, eps_rot, eps_cnot)


# -- simulation and export --------------------------------------------------

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def _single_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "h":
        return _H
    c = math.cos(gate.angle / 2.0)
    s = math.sin(gate.angle / 2.0)
    if gate.kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.diag([c - 1j * s, c + 1j * s])


def simulate_circuit(circuit: Circuit, initial: StateVector) -> StateVector:
    """Gate-by-gate dense simulation."""
    if circuit.n_qubits != initial.n_qubits:
        raise DimensionError(
            f"Circuit on {circuit.n_qubits} qubits, state on {initial.n_qubits}"
        )
    n = circuit.n_qubits
    psi = np.array(initial.amplitudes).reshape((2,) * n)
    for gate in circuit.gates:
        if gate.is_single:
            q = gate.qubits[0]
            psi = np.moveaxis(np.tensordot(_single_matrix(gate), psi, axes=([1], [q])), 0, q)
        else:
            control, target = gate.qubits
            index = [slice(None)] * n
            index[control] = 1
            index = tuple(index)
            axis = target if target < control else target - 1
            psi[index] = np.flip(psi[index], axis=axis).copy()
    return StateVector(psi.reshape(-1))


def to_qasm(circuit: Circuit) -> str:
    """OpenQASM 2.0 text using rx, ry, rz, cx and h."""
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{circuit.n_qubits}];",
    ]
    lines.extend(f"{gate};" for gate in circuit.gates)
    return "\n".join(lines) + "\n"


# -- gate-count search ------------------------------------------------------


def initial_label(problem: AnnealingProblem) -> str:
    """Product-state label (+/-) of the transverse-field initial state."""
    signs = []
    for q in range(problem.n_qubits):
        coeff = problem.h_i.coefficient(PauliString.single(problem.n_qubits, q, "X")).real
        signs.append("+" if coeff < 0 else "-")
    label = "".join(signs)
    overlap = abs(np.vdot(StateVector.from_label(label).amplitudes, problem.initial_state.amplitudes))
    if abs(overlap - 1.0) > 1e-9:
        raise ConfigError(f"{problem.name}: initial state is not a transverse product state")
    return label


@dataclass(frozen=True)
class GateCountRow:
    problem: str
    method: str
    steps: int
    rotations: int
    cnots: int
    expected_error: float
    fidelity: float
    reached: bool

    @property
    def total_gates(self) -> int:
        return self.rotations + self.cnots

    def as_row(self) -> List:
        return [
            self.problem, self.method, self.steps, self.rotations,
            self.cnots, self.expected_error, self.fidelity,
        ]


def compile_problem(
    problem: AnnealingProblem,
    method: str,
    optimized: bool = True,
    order: Sequence[str] = DEFAULT_ORDER,
    sampling: str = "endpoint",
) -> Tuple[Circuit, float]:
    """State preparation plus the compiled plan, and the plan's ideal fidelity."""
    cd = make_cd_term(method, problem)
    result = trotter_evolve(problem, cd, record=False, order=order, sampling=sampling)
    circuit = compile_plan(result.plan, prepend=preparation_circuit(initial_label(problem)))
    if optimized:
        circuit = optimize(circuit)
    return circuit, result.final_fidelity


def steps_to_threshold(
    problem: AnnealingProblem,
    method: str,
    dt: float,
    threshold: float,
    max_steps: int = 64,
    optimized: bool = False,
    order: Sequence[str] = DEFAULT_ORDER,
    sampling: str = "endpoint",
) -> GateCountRow:
    """Smallest step count n (T = n dt) whose ideal fidelity reaches ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold must lie in (0, 1], got {threshold}")
    best = None
    for n in range(1, max_steps + 1):
        candidate = problem.with_timing(n * dt, dt)
        circuit, value = compile_problem(candidate, method, optimized, order, sampling)
        stats = gate_stats(circuit)
        best = GateCountRow(
            problem.name, method, n, stats.rotations, stats.cnots,
            stats.expected_error, value, value >= threshold,
        )
        if best.reached:
            logger.info(
                f"{problem.name} [{method}] reached F={value:.4f} in {n} steps "
                f"({stats.rotations} rotations, {stats.cnots} CNOTs)"
            )
            return best
    logger.warning(
        f"{problem.name} [{method}] did not reach F >= {threshold} within {max_steps} steps"
    )
    return best
