"""
Counter-diabatic (CD) drivers.

Every driver turns (lambda, lambda_dot) into a Hermitian PauliSum H_CD that is
added to H(lambda) during the evolution. The gauge potential A solves
<m|A|n> = i <m|dH|n> / (E_n - E_m), equivalently it minimizes the action
S = Tr[G^2] with G = dH + i[A, H]; H_CD = lambda_dot * A.
"""

from __future__ import annotations

import logging
import math
import re
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from utils.config import get_config
from cdqsim.errors import ConfigError, DimensionError, NumericalError
from cdqsim.models import (
    AnnealingProblem,
    Schedule,
    SpinChainSpec,
    derivative,
    interpolate,
)
from cdqsim.pauli_core import (
    PauliString,
    PauliSum,
    commutator,
    commutator_chain,
    to_dense,
    trace_inner_product,
)

logger = logging.getLogger(__name__)

METHOD_TAGS = (
    "berry_exact",
    "local_berry",
    "local_variational",
    "nested_commutator",
    "zz_closed_form",
)
CLI_METHODS = ("none", "berry", "local-berry", "local-var", "zz-closed", "nc:<l>")


# -- closed-form coefficients ----------------------------------------------


def berry_coefficient(h_x: float, h_z: float, lam: float, lam_dot: float) -> float:
    """Single-spin transitionless coefficient F of Y for h = (h_x(1-l), 0, h_z l)."""
    denominator = 2.0 * (h_x**2 * (1.0 - lam) ** 2 + h_z**2 * lam**2)
    if denominator == 0.0:
        return 0.0
    return -h_x * h_z * lam_dot / denominator


def local_variational_alpha_printed(
    h_x: float, h_z: float, j0: float, lam: float
) -> float:
    """
    Commonly quoted per-site Y coefficient for the local ansatz.

    It agrees with the action minimizer at lambda = 0 and for J0 = 0 only; the
    driver solves the action numerically and this form feeds the regression
    table.
    """
    denominator = h_x**2 * (1.0 - lam) ** 2 + (h_z + 2.0 * j0) ** 2 * lam**2
    if denominator == 0.0:
        return 0.0
    return -0.5 * h_x * h_z / denominator


def zz_pair_cd_coefficient(h_x: float, j0: float, lam: float) -> float:
    """Coefficient of (YZ + ZY) in the exact two-spin ZZ-chain gauge potential."""
    denominator = 2.0 * (j0**2 * lam**2 + 4.0 * (1.0 - lam) ** 2 * h_x**2)
    return -h_x * j0 / denominator


def zz_open_triple_cd_coefficient(h_x: float, j0: float, lam: float) -> float:
    """First-order nested-commutator (YZ + ZY) coefficient, open 3-spin ZZ chain."""
    denominator = 5.0 * j0**2 * lam**2 + 8.0 * (1.0 - lam) ** 2 * h_x**2
    return -h_x * j0 / denominator


def zz_periodic_cd_coefficient(h_x: float, j0: float, lam: float) -> float:
    """First-order nested-commutator (YZ + ZY) coefficient, periodic ZZ chain, N >= 3."""
    denominator = 8.0 * (h_x**2 * (1.0 - lam) ** 2 + j0**2 * lam**2)
    return -h_x * j0 / denominator


def two_spin_ising_alpha(h_x: float, h_z: float, j0: float, lam: float) -> float:
    """First-order alpha for the two-spin chain with uniform h_z (open bond)."""
    numerator = h_z**2 + j0**2
    denominator = lam**2 * (h_z**4 + 6.0 * h_z**2 * j0**2 + j0**4) + (
        1.0 - lam
    ) ** 2 * h_x**2 * (h_z**2 + 4.0 * j0**2)
    return -0.25 * numerator / denominator


def two_spin_ising_alpha_legacy(h_x: float, h_z: float, j0: float, lam: float) -> float:
    """
    Commonly quoted form of the same coefficient.

    Its lambda^2 term (h_z^4 J0^4 + 3 h_z^2 J0^2) mixes energy powers and its
    sign is flipped; kept only for the regression table.
    """
    numerator = h_z**2 + j0**2
    denominator = lam**2 * (h_z**4 * j0**4 + 3.0 * h_z**2 * j0**2) + (
        1.0 - lam
    ) ** 2 * h_x**2 * (h_z**2 + 4.0 * j0**2)
    return 0.25 * numerator / denominator


# -- CD terms ---------------------------------------------------------------


class CDTerm(ABC):
    """A rule producing H_CD(lambda, lambda_dot) as a Hermitian PauliSum."""

    method: str = ""
    order: Optional[int] = None

    def __init__(self, n_qubits: int, schedule: Schedule):
        self.n_qubits = n_qubits
        self.schedule = schedule

    @abstractmethod
    def _operator(self, lam: float, lam_dot: float) -> PauliSum:
        """H_CD for lambda_dot != 0."""

    def evaluate(self, lam: float, lam_dot: float) -> PauliSum:
        if lam_dot == 0.0:
            return PauliSum.zero(self.n_qubits)
        operator = self._operator(lam, lam_dot)
        scale = max(1.0, operator.norm())
        if not operator.is_hermitian(tol=1e-9 * scale):
            raise NumericalError(
                f"{self.method} CD operator is not Hermitian at lambda={lam:.6g}"
            )
        return operator.real_part()

    def at_time(self, t: float) -> PauliSum:
        return self.evaluate(self.schedule.lam(t), self.schedule.lam_dot(t))

    @property
    def label(self) -> str:
        return self.method if self.order is None else f"{self.method}:{self.order}"

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label} n={self.n_qubits}>"


class BerryExactCD(CDTerm):
    method = "berry_exact"

    def __init__(self, h_x: float, h_z: float, schedule: Schedule):
        if h_x == 0 and h_z == 0:
            raise ConfigError("Berry CD term needs a nonzero field")
        super().__init__(1, schedule)
        self.h_x = h_x
        self.h_z = h_z

    def _operator(self, lam: float, lam_dot: float) -> PauliSum:
        coeff = berry_coefficient(self.h_x, self.h_z, lam, lam_dot)
        return PauliSum.from_labels([("Y", coeff)])


class _SiteLocalCD(CDTerm):
    def __init__(self, spec: SpinChainSpec, schedule: Schedule):
        super().__init__(spec.n, schedule)
        self.spec = spec
        self._y = [PauliString.single(spec.n, j, "Y") for j in range(spec.n)]

    @abstractmethod
    def site_coefficient(self, h_z: float, lam: float, lam_dot: float) -> float:
        """Y_j coefficient for a site with longitudinal field h_z."""

    def _operator(self, lam: float, lam_dot: float) -> PauliSum:
        return PauliSum(
            self.n_qubits,
            {
                y: self.site_coefficient(h_z, lam, lam_dot)
                for y, h_z in zip(self._y, self.spec.h_z)
            },
        )


class LocalBerryCD(_SiteLocalCD):
    """Per-site Berry term with the mean-field shifted field h_z + J0."""

    method = "local_berry"

    def site_coefficient(self, h_z, lam, lam_dot):
        return berry_coefficient(self.spec.h_x, h_z + self.spec.j0, lam, lam_dot)


@dataclass(frozen=True, eq=False)
class LocalSolveRecord:
    """Action minimum of A = sum_g alpha_g sum_{j in g} Y_j at one lambda."""

    lam: float
    fields: Tuple[float, ...]
    alphas: Tuple[float, ...]
    action: float

    def alpha_for(self, h_z: float) -> float:
        return self.alphas[self.fields.index(h_z)]


def local_variational_solve(problem: AnnealingProblem, lam: float) -> LocalSolveRecord:
    """
    Minimize S over single-site Y terms, one coefficient per distinct h_z.

    With B_g = i[Y_g, H] the action is Tr[dH^2] + 2 alpha.Tr[B dH] + alpha^T M alpha,
    so alpha = -M^+ Re Tr[B dH].
    """
    spec = problem.chain
    if spec is None:
        raise ConfigError("The local variational term needs a spin-chain problem")
    n = spec.n
    fields = tuple(sorted(set(spec.h_z)))
    generators = [
        PauliSum(
            n,
            {
                PauliString.single(n, j, "Y"): 1.0
                for j, h_z in enumerate(spec.h_z)
                if h_z == field_value
            },
        )
        for field_value in fields
    ]
    h = interpolate(problem, lam)
    dh = derivative(problem)
    brackets = [commutator(y, h).scale(1j) for y in generators]
    gram = np.array(
        [[trace_inner_product(b_k, b_l).real for b_l in brackets] for b_k in brackets]
    )
    rhs = np.array([-trace_inner_product(b_k, dh).real for b_k in brackets])
    try:
        inverse = linalg.pinvh(gram, rtol=get_config().GRAM_RTOL)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Local solve failed at lambda={lam:.6g}: {exc}") from exc
    alphas = inverse @ rhs
    if not np.all(np.isfinite(alphas)):
        raise NumericalError(f"Non-finite local coefficients at lambda={lam:.6g}")
    base_action = trace_inner_product(dh, dh).real
    return LocalSolveRecord(
        lam=lam,
        fields=fields,
        alphas=tuple(float(a) for a in alphas),
        action=float(base_action - 2.0 * alphas @ rhs + alphas @ gram @ alphas),
    )


class LocalVariationalCD(_SiteLocalCD):
    """lambda_dot * sum_j alpha Y_j with alpha minimizing the action at each lambda."""

    method = "local_variational"

    def __init__(self, problem: AnnealingProblem):
        if problem.chain is None:
            raise ConfigError("The local variational term needs a spin-chain problem")
        super().__init__(problem.chain, problem.schedule)
        self.problem = problem
        self._cache: Dict[float, LocalSolveRecord] = {}
        self._lock = threading.Lock()

    def solve(self, lam: float) -> LocalSolveRecord:
        with self._lock:
            cached = self._cache.get(lam)
        if cached is None:
            cached = local_variational_solve(self.problem, lam)
            with self._lock:
                self._cache[lam] = cached
        return cached

    def site_coefficient(self, h_z, lam, lam_dot):
        return lam_dot * self.solve(lam).alpha_for(h_z)


def berry_exact_single(h_x: float, h_z: float, schedule: Schedule) -> BerryExactCD:
    return BerryExactCD(h_x, h_z, schedule)


def local_berry(spec: SpinChainSpec, schedule: Schedule) -> LocalBerryCD:
    return LocalBerryCD(spec, schedule)


def local_variational(problem: AnnealingProblem) -> LocalVariationalCD:
    return LocalVariationalCD(problem)


class ZZClosedFormCD(CDTerm):
    """
    lambda_dot * beta(lambda) * sum over bonds of (YZ + ZY) for pure ZZ chains.

    Two spins use the exact pair coefficient, three spins the three-spin
    first-order form on every bond, periodic rings of four or more the ring form.
    """

    method = "zz_closed_form"

    def __init__(self, problem: AnnealingProblem):
        spec = problem.chain
        if spec is None or spec.n < 2 or spec.j0 == 0.0:
            raise ConfigError("The closed-form ZZ term needs a coupled spin chain")
        if any(h_z != 0.0 for h_z in spec.h_z):
            raise ConfigError("The closed-form ZZ term needs h_z = 0 on every site")
        if spec.n == 2:
            self.coefficient = zz_pair_cd_coefficient
        elif spec.n == 3:
            self.coefficient = zz_open_triple_cd_coefficient
        elif spec.boundary == "periodic":
            self.coefficient = zz_periodic_cd_coefficient
        else:
            raise ConfigError(
                f"No closed-form ZZ coefficient for an open chain with n={spec.n}"
            )
        super().__init__(spec.n, problem.schedule)
        self.spec = spec
        self._pairs = []
        for j, k in spec.bonds():
            for first, second in (("Y", "Z"), ("Z", "Y")):
                letters = ["I"] * spec.n
                letters[j], letters[k] = first, second
                self._pairs.append(PauliString.from_label("".join(letters)))

    def beta(self, lam: float) -> float:
        return self.coefficient(self.spec.h_x, self.spec.j0, lam)

    def _operator(self, lam: float, lam_dot: float) -> PauliSum:
        value = lam_dot * self.beta(lam)
        return PauliSum(self.n_qubits, {p: value for p in self._pairs})


# -- nested-commutator variational ansatz ----------------------------------


@dataclass(frozen=True, eq=False)
class VariationalSolveRecord:
    """Normal-equation data of one action minimization."""

    lam: float
    gram: np.ndarray
    rhs: np.ndarray
    alphas: np.ndarray
    base_action: float
    action: float
    rank: int

    @property
    def order(self) -> int:
        return len(self.alphas)

    @property
    def singular(self) -> bool:
        return self.rank < self.order

    def action_at(self, alphas: Sequence[float]) -> float:
        """S(alpha) = Tr[dH^2] - 2 alpha.r + alpha^T M alpha."""
        a = np.asarray(alphas, dtype=float)
        return float(self.base_action - 2.0 * a @ self.rhs + a @ self.gram @ a)

    def as_row(self) -> List[float]:
        return [self.lam, *self.alphas.tolist(), self.action]


@dataclass(frozen=True, eq=False)
class VariationalAnsatz:
    """A = i sum_k alpha_k C_{2k-1} at one lambda."""

    order: int
    lam: float
    alphas: Tuple[float, ...]
    commutators: Tuple[PauliSum, ...]
    record: VariationalSolveRecord

    @property
    def gauge_potential(self) -> PauliSum:
        total = PauliSum.zero(self.commutators[0].n_qubits)
        for alpha, c in zip(self.alphas, self.commutators):
            total = total + c.scale(1j * alpha)
        return total.real_part()


def variational_nc(problem: AnnealingProblem, order: int, lam: float) -> VariationalAnsatz:
    """Minimize the action over the order-l nested-commutator ansatz at one lambda."""
    if order < 1:
        raise ConfigError(f"Nested-commutator order must be >= 1, got {order}")
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    h = interpolate(problem, lam)
    dh = derivative(problem)
    chain = commutator_chain(h, dh, 2 * order)
    odd = chain[0::2]
    brackets = chain[1::2]

    gram = np.array(
        [[trace_inner_product(b_k, b_l).real for b_l in brackets] for b_k in brackets]
    )
    rhs = np.array([-trace_inner_product(b_k, dh).real for b_k in brackets])
    base_action = trace_inner_product(dh, dh).real

    # Jacobi scaling keeps columns of very different energy powers comparable
    diag = np.diag(gram)
    scale = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    scaled = gram * np.outer(scale, scale)
    try:
        inverse, rank = linalg.pinvh(
            scaled, rtol=get_config().GRAM_RTOL, return_rank=True
        )
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Gram solve failed at lambda={lam:.6g}: {exc}") from exc
    alphas = scale * (inverse @ (scale * rhs))
    if not np.all(np.isfinite(alphas)):
        raise NumericalError(f"Non-finite variational coefficients at lambda={lam:.6g}")
    if rank < order:
        logger.warning(
            f"Singular gram matrix at lambda={lam:.6g} (rank {rank} < order {order}); "
            "using the minimum-norm solution"
        )

    record = VariationalSolveRecord(
        lam=lam,
        gram=gram,
        rhs=rhs,
        alphas=alphas,
        base_action=base_action,
        action=0.0,
        rank=int(rank),
    )
    object.__setattr__(record, "action", record.action_at(alphas))
    return VariationalAnsatz(
        order=order,
        lam=lam,
        alphas=tuple(float(a) for a in alphas),
        commutators=tuple(odd),
        record=record,
    )


class NestedCommutatorCD(CDTerm):
    """lambda_dot * A^(l) with alpha_k re-solved at every requested lambda."""

    method = "nested_commutator"

    def __init__(self, problem: AnnealingProblem, order: int):
        if order < 1:
            raise ConfigError(f"Nested-commutator order must be >= 1, got {order}")
        super().__init__(problem.n_qubits, problem.schedule)
        self.problem = problem
        self.order = order
        self._cache: Dict[float, VariationalAnsatz] = {}
        self._lock = threading.Lock()

    def ansatz(self, lam: float) -> VariationalAnsatz:
        with self._lock:
            cached = self._cache.get(lam)
        if cached is None:
            cached = variational_nc(self.problem, self.order, lam)
            with self._lock:
                self._cache[lam] = cached
        return cached

    def solve_records(self) -> List[VariationalSolveRecord]:
        with self._lock:
            return [self._cache[lam].record for lam in sorted(self._cache)]

    def _operator(self, lam: float, lam_dot: float) -> PauliSum:
        return self.ansatz(lam).gauge_potential.scale(lam_dot)


def nc_cd_term(problem: AnnealingProblem, order: int) -> NestedCommutatorCD:
    return NestedCommutatorCD(problem, order)


def action(problem: AnnealingProblem, gauge: PauliSum, lam: float) -> float:
    """S = Tr[G^2] for an arbitrary gauge potential at lambda."""
    h = interpolate(problem, lam)
    g = derivative(problem) + (gauge.scale(1j)).dot(h) - h.dot(gauge.scale(1j))
    return trace_inner_product(g, g).real


# -- exact oracle -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeOracleResult:
    matrix: np.ndarray
    energies: np.ndarray
    degenerate_pairs: int

    @property
    def degenerate(self) -> bool:
        return self.degenerate_pairs > 0


def exact_gauge_oracle(
    problem: AnnealingProblem, lam: float, gap_tol: Optional[float] = None
) -> GaugeOracleResult:
    """Dense gauge potential built in the instantaneous eigenbasis."""
    settings = get_config()
    if problem.n_qubits > settings.ORACLE_QUBIT_LIMIT:
        raise DimensionError(
            f"Gauge oracle limited to {settings.ORACLE_QUBIT_LIMIT} qubits, "
            f"got {problem.n_qubits}"
        )
    gap_tol = settings.GAP_TOLERANCE if gap_tol is None else gap_tol
    h = to_dense(interpolate(problem, lam))
    dh = to_dense(derivative(problem))
    energies, vectors = np.linalg.eigh(h)
    dh_eigen = vectors.conj().T @ dh @ vectors
    gaps = energies[None, :] - energies[:, None]
    resolved = np.abs(gaps) > gap_tol
    a_eigen = np.zeros_like(dh_eigen)
    a_eigen[resolved] = 1j * dh_eigen[resolved] / gaps[resolved]
    unresolved = ~resolved
    np.fill_diagonal(unresolved, False)
    degenerate_pairs = int(np.count_nonzero(np.triu(unresolved)))
    if degenerate_pairs:
        logger.debug(f"Gauge oracle at lambda={lam:.6g}: {degenerate_pairs} degenerate pairs")
    matrix = vectors @ a_eigen @ vectors.conj().T
    return GaugeOracleResult(matrix=matrix, energies=energies, degenerate_pairs=degenerate_pairs)


# -- factory and reports ----------------------------------------------------

_NC_PATTERN = re.compile(r"^nc:(\d+)$")
_SIMPLE_METHODS = ("none", "berry", "local-berry", "local-var", "zz-closed")
_TAG_TO_METHOD = {
    "none": "none",
    "berry_exact": "berry",
    "local_berry": "local-berry",
    "local_variational": "local-var",
    "zz_closed_form": "zz-closed",
}


def validate_method(method: str) -> str:
    """Normalize a method name, raising ConfigError when it is not recognised."""
    name = method.strip().lower()
    if name in _SIMPLE_METHODS or _NC_PATTERN.match(name):
        return name
    raise ConfigError(f"Unknown CD method {method!r}; choose from {CLI_METHODS}")


def method_from_tag(cd_method: str, cd_order: Optional[int] = None) -> str:
    """Map a (cd_method, cd_order) pair onto a CLI method name."""
    tag = str(cd_method).strip().lower().replace("-", "_")
    if tag in ("nc", "nested_commutator"):
        if cd_order is None:
            raise ConfigError(f"cd_method {cd_method!r} needs cd_order")
        if isinstance(cd_order, bool) or not isinstance(cd_order, int) or cd_order < 0:
            raise ConfigError(f"cd_order must be a non-negative integer, got {cd_order!r}")
        return f"nc:{cd_order}"
    if tag in METHOD_TAGS:
        if cd_order is not None:
            raise ConfigError(f"cd_order only applies to nested_commutator, not {cd_method!r}")
        return _TAG_TO_METHOD[tag]
    return validate_method(str(cd_method))


def make_cd_term(method: str, problem: AnnealingProblem) -> Optional[CDTerm]:
    """Parse a CLI method name (none, berry, local-berry, local-var, zz-closed, nc:<l>)."""
    method = method.strip().lower()
    if method in ("none", ""):
        return None
    match = _NC_PATTERN.match(method)
    if match:
        order = int(match.group(1))
        if order == 0:
            return None
        return nc_cd_term(problem, order)
    spec = problem.chain
    if spec is None:
        raise ConfigError(f"Method {method!r} needs a spin-chain problem")
    if method == "berry":
        if spec.n != 1:
            raise ConfigError("The exact Berry term is only defined for a single spin")
        return berry_exact_single(spec.h_x, spec.h_z[0], problem.schedule)
    if method == "local-berry":
        return local_berry(spec, problem.schedule)
    if method == "local-var":
        return local_variational(problem)
    if method == "zz-closed":
        return ZZClosedFormCD(problem)
    raise ConfigError(f"Unknown CD method {method!r}; choose from {CLI_METHODS}")


def local_alpha_regression(
    problem: AnnealingProblem, lambdas: Sequence[float]
) -> List[Tuple[float, float, float]]:
    """Rows (lambda, numeric, printed form) for a uniform chain."""
    spec = problem.chain
    if spec is None or not spec.is_uniform:
        raise ConfigError("Local regression table needs a uniform spin chain")
    rows = []
    for lam in lambdas:
        numeric = local_variational_solve(problem, lam).alphas[0]
        printed = local_variational_alpha_printed(spec.h_x, spec.h_z[0], spec.j0, lam)
        rows.append((lam, numeric, printed))
    return rows


def zz_coefficient_regression(
    problem: AnnealingProblem, lambdas: Sequence[float]
) -> List[Tuple[float, float, float]]:
    """Rows (lambda, first-order numeric beta, closed-form beta) on the first bond."""
    closed = ZZClosedFormCD(problem)
    j, k = closed.spec.bonds()[0]
    letters = ["I"] * problem.n_qubits
    letters[j], letters[k] = "Y", "Z"
    label = "".join(letters)
    rows = []
    for lam in lambdas:
        numeric = variational_nc(problem, 1, lam).gauge_potential.coefficient(label).real
        rows.append((lam, float(numeric), closed.beta(lam)))
        if not math.isclose(numeric, rows[-1][2], rel_tol=1e-6, abs_tol=1e-12):
            logger.debug(
                f"ZZ beta at lambda={lam:.3g}: numeric {numeric:.10g} vs "
                f"closed form {rows[-1][2]:.10g}"
            )
    return rows


def two_spin_alpha_regression(
    problem: AnnealingProblem, lambdas: Sequence[float]
) -> List[Tuple[float, float, float, float]]:
    """Rows (lambda, numeric, closed form, legacy form) for a uniform two-spin chain."""
    spec = problem.chain
    if spec is None or spec.n != 2 or not spec.is_uniform:
        raise ConfigError("Regression table needs a uniform two-spin chain")
    rows = []
    for lam in lambdas:
        numeric = variational_nc(problem, 1, lam).alphas[0]
        args = (spec.h_x, spec.h_z[0], spec.j0, lam)
        rows.append(
            (lam, numeric, two_spin_ising_alpha(*args), two_spin_ising_alpha_legacy(*args))
        )
        if not math.isclose(numeric, rows[-1][2], rel_tol=1e-8, abs_tol=1e-12):
            logger.warning(
                f"Two-spin alpha at lambda={lam:.3g}: numeric {numeric:.10g} vs "
                f"closed form {rows[-1][2]:.10g}"
            )
    return rows
