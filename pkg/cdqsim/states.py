"""Dense state vectors in big-endian computational-basis order."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from cdqsim.errors import DimensionError

NORM_TOLERANCE = 1e-10

_SINGLE_QUBIT = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    "-": np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0),
}


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized 2^N amplitude vector; the array is copied and frozen."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dim = amplitudes.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise DimensionError(f"State length {dim} is not a power of two >= 2")
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"State is not normalized (norm {norm:.12g})")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def from_label(cls, label: str) -> "StateVector":
        """Product state from characters ``0``, ``1``, ``+``, ``-``."""
        if not label:
            raise DimensionError("Empty state label")
        vector = np.ones(1, dtype=complex)
        for char in label:
            try:
                vector = np.kron(vector, _SINGLE_QUBIT[char])
            except KeyError:
                raise ValueError(f"Invalid state label character {char!r}")
        return cls(vector)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls.from_label("0" * n_qubits)

    @classmethod
    def superposition(cls, bitstrings: Iterable[str]) -> "StateVector":
        """Equal-weight superposition of computational basis states."""
        bitstrings = list(bitstrings)
        if not bitstrings:
            raise ValueError("Need at least one bitstring")
        n = len(bitstrings[0])
        amplitudes = np.zeros(1 << n, dtype=complex)
        for bits in bitstrings:
            amplitudes[basis_index(bits, n)] = 1.0
        return cls(amplitudes / math.sqrt(len(set(bitstrings))))

    @classmethod
    def normalized(cls, amplitudes: Union[np.ndarray, Iterable[complex]]) -> "StateVector":
        vector = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise ValueError("Cannot normalize the zero vector")
        return cls(vector / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def expectation(self, h) -> float:
        """Real part of <psi|H|psi> for a PauliSum ``h``."""
        if h.n_qubits != self.n_qubits:
            raise DimensionError(
                f"Operator on {h.n_qubits} qubits, state on {self.n_qubits}"
            )
        return float(np.vdot(self.amplitudes, h.apply(self.amplitudes)).real)

    def to_bytes(self) -> bytes:
        """Little-endian interleaved (re, im) float64 pairs."""
        return self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "StateVector":
        return cls(np.frombuffer(data, dtype="<c16").astype(complex))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def basis_index(bits: str, n_qubits: int) -> int:
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise DimensionError(f"Bad basis label {bits!r} for {n_qubits} qubits")
    return int(bits, 2)
