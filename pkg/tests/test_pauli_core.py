import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdqsim.errors import DimensionError
from cdqsim.pauli_core import (
    PauliString,
    PauliSum,
    apply_pauli_sum,
    commutator,
    commutator_chain,
    multiply,
    nested_commutator,
    single_qubit_sum,
    to_dense,
    trace_inner_product,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])


def pauli_sums(n):
    term = st.tuples(
        st.text(alphabet="IXYZ", min_size=n, max_size=n),
        st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
    )
    return st.lists(term, min_size=1, max_size=5).map(PauliSum.from_labels)


sum_pairs = st.integers(1, 3).flatmap(lambda n: st.tuples(pauli_sums(n), pauli_sums(n)))


def test_label_round_trip():
    p = PauliString.from_label("xyzi")
    assert p.label == "XYZI"
    assert p.support == (0, 1, 2)
    assert p.weight == 3
    assert not p.is_diagonal


def test_big_endian_dense_order():
    dense = to_dense(PauliSum.from_labels([("XZ", 1.0)]))
    assert np.allclose(dense, np.kron(X, Z))


def test_single_qubit_products():
    x = PauliString.from_label("X")
    y = PauliString.from_label("Y")
    z = PauliString.from_label("Z")
    assert multiply(x, y) == (1j, z)
    assert multiply(y, x) == (-1j, z)
    assert multiply(z, x) == (1j, y)
    assert multiply(x, z) == (-1j, y)
    assert multiply(y, z) == (1j, x)
    assert multiply(x, x) == (1.0, PauliString.identity(1))


def test_commutes_with():
    assert PauliString.from_label("XX").commutes_with(PauliString.from_label("ZZ"))
    assert not PauliString.from_label("XI").commutes_with(PauliString.from_label("ZI"))
    assert PauliString.from_label("XI").commutes_with(PauliString.from_label("IZ"))


def test_commutator_of_x_and_z():
    x = PauliSum.from_labels([("X", 1.0)])
    z = PauliSum.from_labels([("Z", 1.0)])
    assert commutator(x, z).allclose(PauliSum.from_labels([("Y", -2j)]))
    assert not commutator(x, x)


def test_commutator_chain_matches_nested():
    h = PauliSum.from_labels([("XI", -1.0), ("IX", -1.0), ("ZZ", -0.5)])
    dh = PauliSum.from_labels([("ZZ", -1.0), ("XI", 1.0), ("IX", 1.0)])
    chain = commutator_chain(h, dh, 3)
    assert len(chain) == 3
    for depth, term in enumerate(chain, start=1):
        assert term.allclose(nested_commutator(h, dh, depth))


def test_nested_commutator_rejects_zero_depth():
    h = PauliSum.from_labels([("X", 1.0)])
    with pytest.raises(ValueError):
        nested_commutator(h, h, 0)


def test_pruning_drops_tiny_terms():
    s = PauliSum.from_labels([("XI", 1.0), ("IZ", 1e-16)])
    assert len(s) == 1
    assert s.coefficient("IZ") == 0


def test_immutable():
    s = PauliSum.from_labels([("X", 1.0)])
    with pytest.raises(AttributeError):
        s.foo = 1


def test_register_mismatch():
    with pytest.raises(DimensionError):
        PauliSum.from_labels([("X", 1.0)]) + PauliSum.from_labels([("XX", 1.0)])


def test_dense_guard():
    s = PauliSum.from_labels([("XXX", 1.0)])
    with pytest.raises(DimensionError):
        to_dense(s, max_qubits=2)


def test_hermitian_check():
    assert PauliSum.from_labels([("XY", 0.3), ("ZZ", -1.0)]).is_hermitian()
    assert not PauliSum.from_labels([("XY", 0.3j)]).is_hermitian()


def test_text_matches_golden(golden_dir):
    s = PauliSum.from_labels([("ZI", -1.0), ("XX", 0.5), ("YZ", 0.25j)])
    golden = (golden_dir / "pauli_sum.txt").read_text()
    assert s.to_text() == golden
    assert PauliSum.from_text(golden) == s


def test_single_qubit_sum():
    s = single_qubit_sum(3, "X", [1.0, 2.0, 3.0])
    assert s.coefficient("IXI") == 2.0
    with pytest.raises(DimensionError):
        single_qubit_sum(3, "X", [1.0])


@settings(max_examples=50, deadline=None)
@given(sum_pairs)
def test_product_matches_dense(pair):
    a, b = pair
    assert np.allclose(to_dense(a * b), to_dense(a) @ to_dense(b), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(sum_pairs)
def test_commutator_matches_dense(pair):
    a, b = pair
    da, db = to_dense(a), to_dense(b)
    assert np.allclose(to_dense(commutator(a, b)), da @ db - db @ da, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(sum_pairs)
def test_trace_inner_product_matches_dense(pair):
    a, b = pair
    expected = np.trace(to_dense(a).conj().T @ to_dense(b))
    assert abs(trace_inner_product(a, b) - expected) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4).flatmap(pauli_sums), st.integers(0, 2**16))
def test_apply_matches_dense(s, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << s.n_qubits) + 1j * rng.normal(size=1 << s.n_qubits)
    assert np.allclose(apply_pauli_sum(s, psi), to_dense(s) @ psi, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4).flatmap(pauli_sums))
def test_adjoint_matches_dense(s):
    assert np.allclose(to_dense(s.adjoint()), to_dense(s).conj().T, atol=1e-12)


def test_diagonal_of_z_sum():
    s = PauliSum.from_labels([("ZI", 0.7), ("ZZ", -1.0), ("IZ", 0.2)])
    assert np.allclose(s.diagonal(), np.diag(to_dense(s)))
