import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bell_phi_plus, kron_pauli, random_hermitian
from irrcorr.operator_basis import (
    ShapeError,
    SystemShape,
    decode,
    encode,
    from_label,
    full_table,
    index_set,
    moment_vector,
    pauli_matrix,
    pauli_moment,
    pauli_moments,
    synthesize,
    synthesize_table,
    to_label,
    weight,
)


@pytest.mark.parametrize("digits, code", [([0, 0], 0), ([1, 0], 4), ([1, 2, 3, 0], 108)])
def test_encode_examples(digits, code):
    assert encode(digits) == code
    assert decode(code, len(digits)) == tuple(digits)


def test_encode_errors():
    with pytest.raises(ShapeError):
        encode([0, 4])
    with pytest.raises(ShapeError):
        encode([0, 1], n=3)
    with pytest.raises(ShapeError):
        from_label("XQ")


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 4**n - 1))))
def test_encode_decode_roundtrip(nc):
    n, code = nc
    assert encode(decode(code, n)) == code
    assert from_label(to_label(code, n)) == code


@pytest.mark.parametrize("label, w", [("IIII", 0), ("XYZI", 3), ("ZZZZZ", 5)])
def test_weight(label, w):
    assert weight(from_label(label), len(label)) == w


def test_index_set_counts():
    # sum_{w=1..m} C(n, w) 3^w
    assert len(index_set(5, 4)) == 15 + 90 + 270 + 405
    assert list(index_set(2, 1)) == sorted(from_label(s) for s in ["IX", "IY", "IZ", "XI", "YI", "ZI"])


def test_system_shape_cap(monkeypatch):
    assert SystemShape(3).d == 8
    with pytest.raises(ShapeError):
        SystemShape(6)
    monkeypatch.setenv("IRRCORR_MAX_QUBITS", "6")
    assert SystemShape(6).d == 64


@pytest.mark.parametrize("n", [1, 2, 3])
def test_tables_match_kronecker_products(n):
    for code in range(4**n):
        assert np.array_equal(pauli_matrix(code, n), kron_pauli(to_label(code, n)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_orthonormal_exhaustive(n):
    d = 2**n
    mats = [pauli_matrix(c, n) for c in range(4**n)]
    gram = np.array([[np.trace(a.conj().T @ b) / d for b in mats] for a in mats])
    assert np.allclose(gram, np.eye(4**n), atol=1e-14)


def test_orthonormal_sampled_n5(rng):
    n, d = 5, 32
    codes = rng.integers(0, 4**n, size=(40, 2))
    for a, b in codes:
        val = np.trace(pauli_matrix(a, n).conj().T @ pauli_matrix(b, n)) / d
        assert val == pytest.approx(1.0 if a == b else 0.0, abs=1e-14)


def test_bell_moments():
    rho = bell_phi_plus()
    # direct trace evaluation with Kronecker-built operators
    for label, expected in [("XX", 1.0), ("YY", -1.0), ("ZZ", 1.0), ("XZ", 0.0)]:
        assert np.trace(kron_pauli(label) @ rho).real == pytest.approx(expected)
        assert pauli_moment(rho, label) == pytest.approx(expected, abs=1e-15)
    assert pauli_moment(rho, "II") == pytest.approx(1.0)
    mv = moment_vector(rho, 2).as_dict()
    nonzero = {k: v for k, v in mv.items() if abs(v) > 1e-12}
    assert nonzero == pytest.approx({"XX": 1.0, "YY": -1.0, "ZZ": 1.0}, abs=1e-14)


def test_maximally_mixed_moments_vanish():
    mv = moment_vector(np.eye(16) / 16, 2)
    assert np.all(mv.values == 0)


def test_ghz4_level2_moments():
    psi = np.zeros(16)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    rho = np.outer(psi, psi)
    mv = moment_vector(rho, 2).as_dict()
    nonzero = {k for k, v in mv.items() if abs(v) > 1e-12}
    zz = {"".join("Z" if i in pair else "I" for i in range(4))
          for pair in itertools.combinations(range(4), 2)}
    assert nonzero == zz
    assert all(mv[k] == pytest.approx(1.0) for k in zz)


def test_non_hermitian_moment_rejected():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 1.0  # Tr(IX m) = 1 is real, Tr(IY m) = i is not
    assert pauli_moment(m, "IX") == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        pauli_moment(m, "IY")
    with pytest.raises(ShapeError):
        pauli_moment(np.eye(3), "XX")


def test_synthesize_examples():
    assert np.array_equal(synthesize({}, n=2), np.zeros((4, 4)))
    assert np.allclose(synthesize({"Z": 0.7}), np.diag([0.7, -0.7]))
    h = synthesize({"XX": 0.5, "ZZ": 0.5})
    expected = 0.5 * (np.kron(kron_pauli("X"), kron_pauli("X")) + np.kron(kron_pauli("Z"), kron_pauli("Z")))
    assert np.allclose(h, expected, atol=0)
    assert np.allclose(np.diag(h).real, [0.5, -0.5, -0.5, 0.5])
    assert np.allclose(np.fliplr(h).diagonal().real, [0.5] * 4)
    with pytest.raises(ValueError):
        synthesize({"XX": np.nan})


@pytest.mark.parametrize("n", [2, 3, 5])
def test_reconstruction_of_random_hermitian(n, rng):
    d = 2**n
    m = random_hermitian(d, rng)
    table = full_table(n)
    fast = pauli_moments(m, table) / d
    if n < 5:
        dense = [np.trace(kron_pauli(to_label(c, n)) @ m).real / d for c in range(4**n)]
        assert np.allclose(fast, dense, atol=1e-13)
    assert np.max(np.abs(synthesize_table(table, fast) - m)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63))
def test_moment_of_synthesized_string(a, b):
    n, d = 3, 8
    op = synthesize({a: 1.0}, n=3)
    tr = np.trace(pauli_matrix(b, n) @ op)
    assert tr.real == pytest.approx(d if a == b else 0.0, abs=1e-12)
