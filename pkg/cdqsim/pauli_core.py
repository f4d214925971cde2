"""
Exact algebra over N-qubit Pauli strings.

Strings are stored as two bitmasks (x, z) in basis-index order: qubit 0 is the
leftmost letter and the most significant bit of a computational-basis index,
so ``to_dense`` agrees with ``numpy.kron`` applied left to right. Coefficients
are complex; every arithmetic result drops terms below the pruning epsilon.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from utils.config import get_config
from cdqsim.errors import DimensionError

logger = logging.getLogger(__name__)

DEFAULT_PRUNE_EPS = get_config().PAULI_PRUNE_EPS

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

Scalar = Union[int, float, complex]


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``XZI``."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError("A Pauli string needs at least one qubit")
        full = (1 << self.n_qubits) - 1
        if (self.x | self.z) & ~full:
            raise DimensionError(
                f"Bitmasks x={self.x:b}, z={self.z:b} exceed {self.n_qubits} qubits"
            )

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        if not label:
            raise DimensionError("Empty Pauli label")
        x = z = 0
        n = len(label)
        for j, letter in enumerate(label):
            try:
                xb, zb = _LETTER_BITS[letter]
            except KeyError:
                raise ValueError(f"Invalid Pauli letter {letter!r} in {label!r}")
            bit = 1 << (n - 1 - j)
            if xb:
                x |= bit
            if zb:
                z |= bit
        return cls(n, x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """Letter on one qubit, identity elsewhere."""
        letters = ["I"] * n_qubits
        letters[qubit] = letter
        return cls.from_label("".join(letters))

    def _bit(self, qubit: int) -> int:
        return 1 << (self.n_qubits - 1 - qubit)

    def letter(self, qubit: int) -> str:
        bit = self._bit(qubit)
        return _BITS_LETTER[(int(bool(self.x & bit)), int(bool(self.z & bit)))]

    @property
    def label(self) -> str:
        return "".join(self.letter(j) for j in range(self.n_qubits))

    @property
    def support(self) -> Tuple[int, ...]:
        """Qubits carrying a non-identity letter, in ascending order."""
        mask = self.x | self.z
        return tuple(j for j in range(self.n_qubits) if mask & self._bit(j))

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    def commutes_with(self, other: "PauliString") -> bool:
        _check_sizes(self.n_qubits, other.n_qubits)
        return ((self.x & other.z) ^ (self.z & other.x)).bit_count() % 2 == 0

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Return P|psi> for a dense amplitude vector."""
        dim = 1 << self.n_qubits
        if amplitudes.shape != (dim,):
            raise DimensionError(
                f"State of length {amplitudes.shape[0]} does not match "
                f"{self.n_qubits}-qubit string {self.label}"
            )
        index = _basis_indices(self.n_qubits)
        values = _column_values(self.n_qubits, self.x, self.z) * amplitudes
        out = np.empty_like(amplitudes, dtype=complex)
        out[index ^ self.x] = values
        return out


def _check_sizes(n_a: int, n_b: int) -> None:
    if n_a != n_b:
        raise DimensionError(f"Register size mismatch: {n_a} vs {n_b} qubits")


@lru_cache(maxsize=32)
def _basis_indices(n_qubits: int) -> np.ndarray:
    index = np.arange(1 << n_qubits, dtype=np.int64)
    index.setflags(write=False)
    return index


def _parity(values: np.ndarray, mask: int) -> np.ndarray:
    parity = np.zeros_like(values)
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            parity ^= (values >> bit) & 1
        bit += 1
    return parity


def _column_values(n_qubits: int, x: int, z: int) -> np.ndarray:
    """Nonzero entry of column c of the string matrix, sitting in row c ^ x."""
    signs = 1.0 - 2.0 * _parity(_basis_indices(n_qubits), z)
    return _PHASES[(x & z).bit_count() % 4] * signs


def multiply(p: PauliString, q: PauliString) -> Tuple[complex, PauliString]:
    """Product p*q as (phase, string) with phase in {1, i, -1, -i}."""
    _check_sizes(p.n_qubits, q.n_qubits)
    full = (1 << p.n_qubits) - 1
    y1 = p.x & p.z
    x1 = p.x & ~p.z & full
    z1 = p.z & ~p.x & full
    not_x2 = ~q.x & full
    not_z2 = ~q.z & full
    exponent = (
        (y1 & q.z).bit_count()
        - (y1 & q.x).bit_count()
        + (x1 & q.z & q.x).bit_count()
        - (x1 & q.z & not_x2).bit_count()
        + (z1 & q.x & not_z2).bit_count()
        - (z1 & q.x & q.z).bit_count()
    )
    return _PHASES[exponent % 4], PauliString(p.n_qubits, p.x ^ q.x, p.z ^ q.z)


class PauliSum:
    """
    Weighted sum of Pauli strings over a fixed register.

    Instances are immutable; arithmetic returns new sums. Terms whose
    coefficient magnitude falls below ``eps`` are dropped on construction.
    """

    __slots__ = ("_n_qubits", "_terms", "_eps")

    def __init__(
        self,
        n_qubits: int,
        terms: Optional[Mapping[PauliString, Scalar]] = None,
        eps: Optional[float] = None,
    ):
        if n_qubits < 1:
            raise DimensionError("A Pauli sum needs at least one qubit")
        eps = DEFAULT_PRUNE_EPS if eps is None else eps
        kept: Dict[PauliString, complex] = {}
        for string, coeff in (terms or {}).items():
            _check_sizes(n_qubits, string.n_qubits)
            coeff = complex(coeff)
            if not np.isfinite(coeff):
                raise ValueError(f"Non-finite coefficient on {string.label}")
            if abs(coeff) >= eps:
                kept[string] = coeff
        object.__setattr__(self, "_n_qubits", n_qubits)
        object.__setattr__(self, "_terms", kept)
        object.__setattr__(self, "_eps", eps)

    def __setattr__(self, name, value):
        raise AttributeError("PauliSum is immutable")

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: Scalar = 1.0) -> "PauliSum":
        return cls(n_qubits, {PauliString.identity(n_qubits): coeff})

    @classmethod
    def from_labels(cls, pairs: Iterable[Tuple[str, Scalar]]) -> "PauliSum":
        """Build from ``(label, coefficient)`` pairs; repeated labels add up."""
        acc: Dict[PauliString, complex] = {}
        n = None
        for label, coeff in pairs:
            string = PauliString.from_label(label)
            if n is None:
                n = string.n_qubits
            _check_sizes(n, string.n_qubits)
            acc[string] = acc.get(string, 0.0) + complex(coeff)
        if n is None:
            raise DimensionError("Cannot infer register size from an empty term list")
        return cls(n, acc)

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        """Parse the canonical ``<re> <im> <letters>`` one-term-per-line format."""
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"Line {lineno}: expected '<re> <im> <letters>'")
            pairs.append((parts[2], complex(float(parts[0]), float(parts[1]))))
        return cls.from_labels(pairs)

    # -- inspection ---------------------------------------------------------

    @property
    def n_qubits(self) -> int:
        return self._n_qubits

    @property
    def eps(self) -> float:
        return self._eps

    def terms(self) -> Tuple[Tuple[PauliString, complex], ...]:
        """Terms in deterministic label order."""
        return tuple(sorted(self._terms.items(), key=lambda item: item[0].label))

    def __iter__(self) -> Iterator[Tuple[PauliString, complex]]:
        return iter(self.terms())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, string: Union[str, PauliString]) -> complex:
        if isinstance(string, str):
            string = PauliString.from_label(string)
        return self._terms.get(string, 0.0j)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_diagonal(self) -> bool:
        return all(string.is_diagonal for string in self._terms)

    def max_weight(self) -> int:
        return max((s.weight for s in self._terms), default=0)

    def norm(self) -> float:
        """Normalized Hilbert-Schmidt norm sqrt(sum |c|^2)."""
        return float(np.sqrt(sum(abs(c) ** 2 for c in self._terms.values())))

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        _check_sizes(self.n_qubits, other.n_qubits)
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= atol
            for k in keys
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})*{s.label}" for s, c in self.terms())
        return f"PauliSum({body or '0'})"

    def to_text(self) -> str:
        lines = []
        for string, coeff in self.terms():
            lines.append(f"{coeff.real + 0.0!r} {coeff.imag + 0.0!r} {string.label}")
        return "\n".join(lines) + ("\n" if lines else "")

    # -- arithmetic ---------------------------------------------------------

    def _combine(self, other: "PauliSum", sign: float) -> "PauliSum":
        _check_sizes(self.n_qubits, other.n_qubits)
        acc = dict(self._terms)
        for string, coeff in other._terms.items():
            acc[string] = acc.get(string, 0.0) + sign * coeff
        return PauliSum(self.n_qubits, acc, self._eps)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._combine(other, 1.0)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._combine(other, -1.0)

    def __neg__(self) -> "PauliSum":
        return self.scale(-1.0)

    def scale(self, factor: Scalar) -> "PauliSum":
        return PauliSum(
            self.n_qubits, {s: factor * c for s, c in self._terms.items()}, self._eps
        )

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return self.dot(other)
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def dot(self, other: "PauliSum") -> "PauliSum":
        """Operator product self * other."""
        _check_sizes(self.n_qubits, other.n_qubits)
        acc: Dict[PauliString, complex] = {}
        for p, cp in self._terms.items():
            for q, cq in other._terms.items():
                phase, r = multiply(p, q)
                acc[r] = acc.get(r, 0.0) + phase * cp * cq
        return PauliSum(self.n_qubits, acc, self._eps)

    def adjoint(self) -> "PauliSum":
        return PauliSum(
            self.n_qubits,
            {s: c.conjugate() for s, c in self._terms.items()},
            self._eps,
        )

    def real_part(self) -> "PauliSum":
        """Drop imaginary coefficient parts (Hermitian projection)."""
        return PauliSum(
            self.n_qubits, {s: c.real for s, c in self._terms.items()}, self._eps
        )

    # -- matrix-free action -------------------------------------------------

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Return H|psi> without building the dense matrix."""
        out = np.zeros(1 << self.n_qubits, dtype=complex)
        for string, coeff in self._terms.items():
            out += coeff * string.apply(amplitudes)
        return out

    def diagonal(self) -> np.ndarray:
        """Computational-basis diagonal of the Z-only part of the sum."""
        index = _basis_indices(self.n_qubits)
        diag = np.zeros(index.shape[0], dtype=complex)
        for string, coeff in self._terms.items():
            if string.is_diagonal:
                diag += coeff * (1.0 - 2.0 * _parity(index, string.z))
        return diag


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] = ab - ba; only anticommuting string pairs contribute."""
    _check_sizes(a.n_qubits, b.n_qubits)
    acc: Dict[PauliString, complex] = {}
    for p, cp in a.terms():
        for q, cq in b.terms():
            if p.commutes_with(q):
                continue
            phase, r = multiply(p, q)
            acc[r] = acc.get(r, 0.0) + 2.0 * phase * cp * cq
    return PauliSum(a.n_qubits, acc, a.eps)


def nested_commutator(h: PauliSum, dh: PauliSum, depth: int) -> PauliSum:
    """Left-nested bracket [h, [h, ... [h, dh]]] with ``depth`` brackets."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    result = dh
    for _ in range(depth):
        result = commutator(h, result)
    return result


def commutator_chain(h: PauliSum, dh: PauliSum, depth: int) -> Tuple[PauliSum, ...]:
    """All brackets C_1..C_depth where C_k = [h, C_{k-1}] and C_0 = dh."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    chain = []
    current = dh
    for _ in range(depth):
        current = commutator(h, current)
        chain.append(current)
    return tuple(chain)


def trace_inner_product(a: PauliSum, b: PauliSum) -> complex:
    """Hilbert-Schmidt pairing Tr[a^dagger b]."""
    _check_sizes(a.n_qubits, b.n_qubits)
    shorter = a if len(a) <= len(b) else b
    total = 0.0j
    for string, _ in shorter.terms():
        total += a.coefficient(string).conjugate() * b.coefficient(string)
    return (1 << a.n_qubits) * total


def to_dense(a: PauliSum, max_qubits: Optional[int] = None) -> np.ndarray:
    """Dense 2^N x 2^N matrix of a Pauli sum."""
    limit = get_config().DENSE_QUBIT_LIMIT if max_qubits is None else max_qubits
    if a.n_qubits > limit:
        raise DimensionError(
            f"{a.n_qubits} qubits exceeds the dense export limit of {limit}"
        )
    dim = 1 << a.n_qubits
    index = _basis_indices(a.n_qubits)
    matrix = np.zeros((dim, dim), dtype=complex)
    for string, coeff in a.terms():
        matrix[index ^ string.x, index] += coeff * _column_values(
            a.n_qubits, string.x, string.z
        )
    return matrix


def single_qubit_sum(n_qubits: int, letter: str, coeffs: Iterable[Scalar]) -> PauliSum:
    """Sum_j c_j * letter_j over all qubits."""
    coeffs = list(coeffs)
    if len(coeffs) != n_qubits:
        raise DimensionError(f"Expected {n_qubits} coefficients, got {len(coeffs)}")
    return PauliSum(
        n_qubits,
        {PauliString.single(n_qubits, j, letter): c for j, c in enumerate(coeffs)},
    )


def apply_pauli_sum(h: PauliSum, amplitudes: np.ndarray) -> np.ndarray:
    """H|psi> for a dense amplitude vector."""
    return h.apply(np.asarray(amplitudes, dtype=complex))
