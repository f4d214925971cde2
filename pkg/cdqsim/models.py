"""
Annealing problem builders.

A problem interpolates H(lambda) = (1 - lambda) H_i + lambda H_f under a
schedule lambda(t) and carries its initial and target states. Chains use the
transverse-field Ising form with per-site longitudinal fields.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from utils.config import get_config
from cdqsim.errors import ConfigError
from cdqsim.states import StateVector
from cdqsim.pauli_core import PauliString, PauliSum, single_qubit_sum, to_dense

logger = logging.getLogger(__name__)

BOUNDARIES = ("open", "periodic")
_STEP_TOLERANCE = 1e-9
_LAMBDA_SLACK = 1e-12


class Schedule(ABC):
    """Interpolation parameter lambda(t) on [0, T]."""

    total_time: float

    @abstractmethod
    def lam(self, t: float) -> float:
        """lambda(t), clamped to [0, 1] outside [0, T]."""

    @abstractmethod
    def lam_dot(self, t: float) -> float:
        """d lambda / dt."""

    @property
    def name(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Sin2Schedule(Schedule):
    """lambda(t) = sin^2(pi t / 2T); flat at both ends."""

    total_time: float

    def __post_init__(self):
        if not self.total_time > 0 or not math.isfinite(self.total_time):
            raise ConfigError(f"Total time must be positive, got {self.total_time}")

    @property
    def omega(self) -> float:
        return math.pi / (2.0 * self.total_time)

    @property
    def name(self) -> str:
        return "sin2"

    def lam(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= self.total_time:
            return 1.0
        return math.sin(self.omega * t) ** 2

    def lam_dot(self, t: float) -> float:
        # exactly zero at and beyond the endpoints
        if t <= 0.0 or t >= self.total_time:
            return 0.0
        return self.omega * math.sin(2.0 * self.omega * t)


@dataclass(frozen=True)
class LinearSchedule(Schedule):
    """lambda(t) = t / T. lambda_dot does not vanish at the endpoints."""

    total_time: float

    def __post_init__(self):
        if not self.total_time > 0 or not math.isfinite(self.total_time):
            raise ConfigError(f"Total time must be positive, got {self.total_time}")

    @property
    def name(self) -> str:
        return "linear"

    def lam(self, t: float) -> float:
        return min(max(t / self.total_time, 0.0), 1.0)

    def lam_dot(self, t: float) -> float:
        return 1.0 / self.total_time


def schedule_sin2(T: float) -> Sin2Schedule:
    return Sin2Schedule(float(T))


def schedule_linear(T: float) -> LinearSchedule:
    return LinearSchedule(float(T))


SCHEDULES = {"sin2": schedule_sin2, "linear": schedule_linear}


def make_schedule(name: str, T: float) -> Schedule:
    try:
        return SCHEDULES[name](T)
    except KeyError:
        raise ConfigError(f"Unknown schedule {name!r}; choose from {sorted(SCHEDULES)}")


@dataclass(frozen=True)
class SpinChainSpec:
    """Transverse-field Ising chain parameters."""

    n: int
    h_x: float
    h_z: Tuple[float, ...]
    j0: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"A chain needs at least one spin, got n={self.n}")
        if len(self.h_z) != self.n:
            raise ConfigError(
                f"h_z has {len(self.h_z)} entries but the chain has {self.n} spins"
            )
        if self.boundary not in BOUNDARIES:
            raise ConfigError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}"
            )
        object.__setattr__(self, "h_z", tuple(float(v) for v in self.h_z))

    @classmethod
    def uniform(
        cls,
        n: int,
        h_x: float,
        h_z: Union[float, Sequence[float]],
        j0: float = 0.0,
        boundary: str = "open",
    ) -> "SpinChainSpec":
        """Accept a scalar longitudinal field and broadcast it to every site."""
        if isinstance(h_z, (int, float)):
            h_z = (float(h_z),) * n
        return cls(n=n, h_x=float(h_x), h_z=tuple(h_z), j0=float(j0), boundary=boundary)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.h_z)) <= 1

    def bonds(self) -> Tuple[Tuple[int, int], ...]:
        """Nearest-neighbour pairs (j, j+1), wrapping for periodic chains."""
        pairs = [(j, j + 1) for j in range(self.n - 1)]
        if self.boundary == "periodic" and self.n >= 2:
            wrapped = (0, self.n - 1)
            if wrapped in pairs:
                logger.warning(
                    f"Periodic chain with n={self.n}: wrapped bond duplicates "
                    f"{wrapped}; keeping a single copy"
                )
            else:
                pairs.append((self.n - 1, 0))
        return tuple(pairs)


@dataclass(frozen=True)
class AnnealingProblem:
    """One digitized annealing experiment."""

    name: str
    h_i: PauliSum
    h_f: PauliSum
    schedule: Schedule
    dt: float
    initial_state: StateVector
    target_state: StateVector
    chain: Optional[SpinChainSpec] = field(default=None, compare=False)

    def __post_init__(self):
        if self.h_i.n_qubits != self.h_f.n_qubits:
            raise ConfigError("H_i and H_f act on different registers")
        for label, h in (("H_i", self.h_i), ("H_f", self.h_f)):
            if not h.is_hermitian():
                raise ConfigError(f"{label} is not Hermitian")
        for label, state in (
            ("initial", self.initial_state),
            ("target", self.target_state),
        ):
            if state.n_qubits != self.h_i.n_qubits:
                raise ConfigError(
                    f"{label} state has {state.n_qubits} qubits, "
                    f"Hamiltonian has {self.h_i.n_qubits}"
                )
        if not self.dt > 0:
            raise ConfigError(f"Time step must be positive, got {self.dt}")
        ratio = self.schedule.total_time / self.dt
        steps = round(ratio)
        if steps < 1 or abs(ratio - steps) > _STEP_TOLERANCE * max(1.0, ratio):
            raise ConfigError(
                f"T/dt = {self.schedule.total_time}/{self.dt} = {ratio:.6g} "
                "is not a positive integer"
            )

    @property
    def n_qubits(self) -> int:
        return self.h_i.n_qubits

    @property
    def total_time(self) -> float:
        return self.schedule.total_time

    @property
    def n_steps(self) -> int:
        return round(self.schedule.total_time / self.dt)

    def step_time(self, j: int) -> float:
        """t_j = j T / n, exact at j = n."""
        if j >= self.n_steps:
            return self.total_time
        return self.total_time * j / self.n_steps

    @property
    def target_support(self) -> Tuple[str, ...]:
        """Bitstrings carrying the target state's weight."""
        probs = self.target_state.probabilities()
        return tuple(
            format(i, f"0{self.n_qubits}b") for i in np.flatnonzero(probs > 1e-12)
        )

    def with_target(self, target: StateVector) -> "AnnealingProblem":
        return replace(self, target_state=target)

    def with_timing(self, T: float, dt: float) -> "AnnealingProblem":
        return replace(self, schedule=make_schedule(self.schedule.name, T), dt=dt)


def interpolate(problem: AnnealingProblem, lam: float) -> PauliSum:
    """(1 - lambda) H_i + lambda H_f."""
    if not -_LAMBDA_SLACK <= lam <= 1.0 + _LAMBDA_SLACK:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    lam = min(max(lam, 0.0), 1.0)
    return problem.h_i.scale(1.0 - lam) + problem.h_f.scale(lam)


def derivative(problem: AnnealingProblem) -> PauliSum:
    """d H / d lambda = H_f - H_i, independent of lambda."""
    return problem.h_f - problem.h_i


# -- ground states ----------------------------------------------------------


def _x_only(h: PauliSum) -> bool:
    return all(s.z == 0 for s, _ in h.terms())


def _hadamard_conjugate(h: PauliSum) -> PauliSum:
    """Swap X and Z letters of an X-only sum, making it diagonal."""
    return PauliSum(h.n_qubits, {PauliString(s.n_qubits, 0, s.x): c for s, c in h})


def ground_energy(h: PauliSum) -> float:
    """Lowest eigenvalue, via the diagonal for Z- or X-only sums."""
    if h.is_diagonal():
        return float(h.diagonal().real.min())
    if _x_only(h):
        return float(_hadamard_conjugate(h).diagonal().real.min())
    return float(np.linalg.eigvalsh(to_dense(h))[0])


def ground_manifold(h: PauliSum, tol: float = 1e-9) -> Tuple[int, ...]:
    """Computational-basis indices minimizing a diagonal Hamiltonian."""
    if not h.is_diagonal():
        raise ConfigError("ground_manifold needs a computational-basis diagonal sum")
    energies = h.diagonal().real
    return tuple(int(i) for i in np.flatnonzero(energies <= energies.min() + tol))


def symmetric_ground_state(h: PauliSum) -> StateVector:
    """Equal-weight superposition of the degenerate basis ground states."""
    indices = ground_manifold(h)
    amplitudes = np.zeros(1 << h.n_qubits, dtype=complex)
    amplitudes[list(indices)] = 1.0 / math.sqrt(len(indices))
    return StateVector(amplitudes)


def transverse_ground_state(h_x_coeffs: Sequence[float]) -> StateVector:
    """Product of |+> (negative field) or |-> (positive field) per site."""
    if any(c == 0 for c in h_x_coeffs):
        raise ConfigError("Transverse field must be nonzero on every site")
    return StateVector.from_label("".join("+" if c < 0 else "-" for c in h_x_coeffs))


def ground_manifold_overlap(state: StateVector, h: PauliSum) -> float:
    """Probability weight of ``state`` inside the ground eigenspace of ``h``."""
    if h.is_diagonal():
        probs = state.probabilities()
        return float(probs[list(ground_manifold(h))].sum())
    values, vectors = np.linalg.eigh(to_dense(h))
    ground = vectors[:, values <= values[0] + get_config().GAP_TOLERANCE]
    return float(np.sum(np.abs(ground.conj().T @ state.amplitudes) ** 2))


def verify_ground_states(problem: AnnealingProblem, tol: float = 1e-10) -> None:
    """Check initial/target states lie in the ground eigenspaces of H_i/H_f."""
    for label, h, state in (
        ("initial", problem.h_i, problem.initial_state),
        ("target", problem.h_f, problem.target_state),
    ):
        energy = state.expectation(h)
        e0 = ground_energy(h)
        if energy - e0 > tol * max(1.0, abs(e0)):
            raise ConfigError(
                f"{problem.name}: {label} state energy {energy:.12g} is above the "
                f"ground energy {e0:.12g}"
            )


# -- builders ---------------------------------------------------------------


def _chain_hamiltonians(spec: SpinChainSpec) -> Tuple[PauliSum, PauliSum]:
    n = spec.n
    h_i = single_qubit_sum(n, "X", [spec.h_x] * n)
    h_f = single_qubit_sum(n, "Z", spec.h_z)
    if spec.j0 != 0.0 and n >= 2:
        zz = {}
        for j, k in spec.bonds():
            letters = ["I"] * n
            letters[j] = letters[k] = "Z"
            zz[PauliString.from_label("".join(letters))] = spec.j0
        h_f = h_f + PauliSum(n, zz)
    return h_i, h_f


def _build_from_spec(
    name: str, spec: SpinChainSpec, T: float, dt: float, schedule: str
) -> AnnealingProblem:
    if spec.h_x == 0:
        raise ConfigError(f"{name}: transverse field h_x must be nonzero")
    h_i, h_f = _chain_hamiltonians(spec)
    if not h_f:
        raise ConfigError(f"{name}: final Hamiltonian is zero, ground state undefined")
    problem = AnnealingProblem(
        name=name,
        h_i=h_i,
        h_f=h_f,
        schedule=make_schedule(schedule, T),
        dt=dt,
        initial_state=transverse_ground_state([spec.h_x] * spec.n),
        target_state=symmetric_ground_state(h_f),
        chain=spec,
    )
    if spec.n <= get_config().DENSE_QUBIT_LIMIT:
        verify_ground_states(problem)
    logger.debug(
        f"Built {name}: n={spec.n}, T={T}, dt={dt}, steps={problem.n_steps}, "
        f"target support={problem.target_support[:4]}"
    )
    return problem


def build_single_spin(
    h_x: float = -1.0,
    h_z: float = 1.0,
    T: float = 1.0,
    dt: float = 0.2,
    schedule: str = "sin2",
) -> AnnealingProblem:
    """H_i = h_x X, H_f = h_z Z on one qubit."""
    if h_x == 0 or h_z == 0:
        raise ConfigError("Single-spin problem needs nonzero h_x and h_z")
    spec = SpinChainSpec.uniform(1, h_x, h_z)
    return _build_from_spec("single_spin", spec, T, dt, schedule)


def build_ising_chain(
    spec: SpinChainSpec, T: float = 1.0, dt: float = 0.2, schedule: str = "sin2"
) -> AnnealingProblem:
    """Transverse-field Ising chain with longitudinal fields and ZZ coupling."""
    if spec.n < 2:
        raise ConfigError(f"An Ising chain needs n >= 2, got {spec.n}")
    return _build_from_spec(f"ising_chain_{spec.n}", spec, T, dt, schedule)


def build_zz_chain(
    n: int,
    h_x: float = -1.0,
    j0: float = -1.0,
    T: float = 1.0,
    dt: float = 0.1,
    boundary: str = "periodic",
    schedule: str = "sin2",
) -> AnnealingProblem:
    """Pure ZZ target chain; ferromagnetic J0 < 0 gives a GHZ target."""
    if n < 2:
        raise ConfigError(f"A ZZ chain needs n >= 2, got {n}")
    if j0 == 0:
        raise ConfigError("ZZ chain needs a nonzero coupling J0")
    spec = SpinChainSpec.uniform(n, h_x, 0.0, j0=j0, boundary=boundary)
    return _build_from_spec(f"zz_chain_{n}", spec, T, dt, schedule)
