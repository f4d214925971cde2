"""
Readout noise and matrix-inversion measurement-error mitigation.

Columns of the response matrix are indexed by the prepared basis state and
rows by the observed one, so P_noisy = M_R P_actual. Sampling uses numpy's
PCG64 generator (``numpy.random.default_rng``) seeded explicitly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from utils.config import get_config
from cdqsim.errors import ConfigError, DimensionError, NumericalError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]
_DISTRIBUTION_TOL = 1e-9


@dataclass(frozen=True)
class ReadoutModel:
    """Independent per-qubit flip probabilities p10 = P(read 1 | 0), p01 = P(read 0 | 1)."""

    p10: Tuple[float, ...]
    p01: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p10", tuple(float(p) for p in self.p10))
        object.__setattr__(self, "p01", tuple(float(p) for p in self.p01))
        if len(self.p10) != len(self.p01) or not self.p10:
            raise ConfigError("p10 and p01 need one entry per qubit")
        for p in self.p10 + self.p01:
            if not 0.0 <= p < 0.5:
                raise ConfigError(f"Readout error probabilities must lie in [0, 0.5), got {p}")

    @classmethod
    def symmetric(cls, n_qubits: int, p: Optional[float] = None) -> "ReadoutModel":
        p = get_config().READOUT_ERROR if p is None else p
        return cls((p,) * n_qubits, (p,) * n_qubits)

    @classmethod
    def noiseless(cls, n_qubits: int) -> "ReadoutModel":
        return cls.symmetric(n_qubits, 0.0)

    @property
    def n_qubits(self) -> int:
        return len(self.p10)

    def confusion(self, qubit: int) -> np.ndarray:
        p10, p01 = self.p10[qubit], self.p01[qubit]
        return np.array([[1.0 - p10, p01], [p10, 1.0 - p01]])


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        dim = matrix.shape[0]
        if matrix.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
            raise DimensionError(f"Response matrix must be 2^n square, got {matrix.shape}")
        if np.any(matrix < 0):
            raise ValueError("Response matrix has negative entries")
        if not np.allclose(matrix.sum(axis=0), 1.0, atol=1e-9):
            raise ValueError("Response matrix columns must sum to 1")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1


@dataclass(frozen=True, eq=False)
class CountsHistogram:
    counts: Mapping[str, int]
    shots: int
    seed: Optional[int] = None
    n_qubits: int = field(default=0)

    def __post_init__(self):
        counts = {k: int(v) for k, v in sorted(self.counts.items()) if v}
        if sum(counts.values()) != self.shots:
            raise ValueError(
                f"Counts sum to {sum(counts.values())}, expected {self.shots} shots"
            )
        n = self.n_qubits or (len(next(iter(counts))) if counts else 0)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n_qubits", n)

    def to_distribution(self) -> np.ndarray:
        probs = np.zeros(1 << self.n_qubits)
        for bits, count in self.counts.items():
            probs[int(bits, 2)] = count / self.shots
        return probs

    def rows(self) -> Iterable[Tuple[str, int]]:
        return self.counts.items()


def _check_distribution(probs: np.ndarray, n_qubits: Optional[int] = None) -> np.ndarray:
    probs = np.asarray(probs, dtype=float).reshape(-1)
    dim = probs.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise DimensionError(f"Distribution length {dim} is not a power of two")
    if n_qubits is not None and dim != 1 << n_qubits:
        raise DimensionError(f"Distribution of length {dim} for {n_qubits} qubits")
    if np.any(probs < -_DISTRIBUTION_TOL) or abs(probs.sum() - 1.0) > _DISTRIBUTION_TOL:
        raise ValueError("Input is not a probability distribution")
    return np.clip(probs, 0.0, None) / np.clip(probs, 0.0, None).sum()


def build_response_matrix(model: ReadoutModel, n: Optional[int] = None) -> ResponseMatrix:
    """Tensor product of the per-qubit confusion matrices."""
    n = model.n_qubits if n is None else n
    if n != model.n_qubits:
        raise DimensionError(f"Model covers {model.n_qubits} qubits, asked for {n}")
    limit = get_config().DENSE_QUBIT_LIMIT
    if n > limit:
        raise DimensionError(f"Dense response matrix limited to {limit} qubits")
    matrix = np.ones((1, 1))
    for q in range(n):
        matrix = np.kron(matrix, model.confusion(q))
    return ResponseMatrix(matrix)


def noisy_distribution(probs: np.ndarray, model: ReadoutModel) -> np.ndarray:
    """M_R p applied qubit by qubit, without forming M_R."""
    probs = _check_distribution(probs, model.n_qubits)
    n = model.n_qubits
    tensor = probs.reshape((2,) * n)
    for q in range(n):
        tensor = np.moveaxis(np.tensordot(model.confusion(q), tensor, axes=([1], [q])), 0, q)
    return tensor.reshape(-1)


def _seed_value(seed: SeedLike) -> Optional[int]:
    return seed if isinstance(seed, int) else None


def apply_readout_noise(
    probs: np.ndarray, model: ReadoutModel, seed: SeedLike, shots: int
) -> CountsHistogram:
    """Sample ``shots`` readouts from M_R p with a seeded generator."""
    if shots < 1:
        raise ConfigError(f"shots must be positive, got {shots}")
    noisy = noisy_distribution(probs, model)
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, noisy / noisy.sum())
    n = model.n_qubits
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c}
    return CountsHistogram(counts, shots, _seed_value(seed), n)


def calibrate_response_matrix(model: ReadoutModel, shots: int, seed: SeedLike) -> ResponseMatrix:
    """Estimate M_R by sampling every basis preparation through the readout model."""
    n = model.n_qubits
    if n > get_config().DENSE_QUBIT_LIMIT:
        raise DimensionError("Calibration needs a dense response matrix")
    rng = np.random.default_rng(seed)
    dim = 1 << n
    matrix = np.zeros((dim, dim))
    for i in range(dim):
        delta = np.zeros(dim)
        delta[i] = 1.0
        matrix[:, i] = apply_readout_noise(delta, model, rng, shots).to_distribution()
    logger.debug(f"Calibrated {dim}x{dim} response matrix with {shots} shots per column")
    return ResponseMatrix(matrix)


def invert_readout(noisy: np.ndarray, m: ResponseMatrix) -> np.ndarray:
    """Raw quasi-probabilities M_R^{-1} P_noisy."""
    noisy = _check_distribution(noisy, m.n_qubits)
    try:
        return linalg.solve(m.matrix, noisy)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Response matrix is singular: {exc}") from exc


def mitigate(noisy: np.ndarray, m: ResponseMatrix) -> np.ndarray:
    """Invert, clip negative quasi-probabilities to zero and renormalize."""
    inverted = invert_readout(noisy, m)
    clipped_mass = float(-inverted[inverted < 0].sum())
    repaired = np.clip(inverted, 0.0, None)
    total = repaired.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalError("Mitigated distribution has no positive mass")
    if clipped_mass > 0:
        logger.info(f"Mitigation clipped {clipped_mass:.3e} of negative quasi-probability")
    return repaired / total


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"Distributions of shapes {p.shape} and {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True, eq=False)
class MitigationReport:
    actual: np.ndarray
    histogram: CountsHistogram
    noisy: np.ndarray
    inverted: np.ndarray
    mitigated: np.ndarray

    @property
    def tv_noisy(self) -> float:
        return total_variation(self.noisy, self.actual)

    @property
    def tv_mitigated(self) -> float:
        return total_variation(self.mitigated, self.actual)

    @property
    def clipped_mass(self) -> float:
        return float(-self.inverted[self.inverted < 0].sum())


def mitigation_experiment(
    actual: np.ndarray,
    model: ReadoutModel,
    shots: int,
    seed: SeedLike,
    response: Optional[ResponseMatrix] = None,
) -> MitigationReport:
    """Sample, invert and repair one distribution; returns every stage."""
    actual = _check_distribution(actual, model.n_qubits)
    response = build_response_matrix(model) if response is None else response
    histogram = apply_readout_noise(actual, model, seed, shots)
    noisy = histogram.to_distribution()
    inverted = invert_readout(noisy, response)
    mitigated = mitigate(noisy, response)
    report = MitigationReport(actual, histogram, noisy, inverted, mitigated)
    shot_scale = 1.0 / math.sqrt(shots)
    if report.clipped_mass > 5.0 * shot_scale:
        logger.warning(
            f"Clipped mass {report.clipped_mass:.3e} exceeds shot-noise scale {shot_scale:.3e}"
        )
    return report
