"""Pauli-string algebra against dense matrices and algebraic identities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chronospec.pauli import (
    CoefficientError,
    LcuHamiltonian,
    PauliError,
    PauliString,
    dense_hamiltonian,
    dense_pauli,
    eval_coefficients,
    parse_coefficient,
    pauli_apply_basis,
    pauli_apply_state,
    pauli_product,
)

LABEL_ALPHABET = "IXYZ"


def random_label(rng, n):
    return "".join(rng.choice(list(LABEL_ALPHABET)) for _ in range(n))


pauli_strings = st.integers(1, 4).flatmap(
    lambda n: st.builds(
        PauliString,
        n_qubits=st.just(n),
        x_mask=st.integers(0, 2**n - 1),
        z_mask=st.integers(0, 2**n - 1),
        phase_exp=st.integers(0, 3),
    )
)


def test_label_round_trip():
    for label in ("I", "X", "Y", "Z", "XYZI", "ZZXY", "IIII"):
        p = PauliString.from_label(label)
        assert p.label == label
        assert np.allclose(dense_pauli(p), dense_pauli(PauliString.from_label(p.label)))


def test_from_label_rejects_bad_characters():
    with pytest.raises(PauliError):
        PauliString.from_label("XQ")


def test_single_qubit_matrices():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.array([[1, 0], [0, -1]], dtype=complex)
    assert np.allclose(dense_pauli(PauliString.from_label("X")), X)
    assert np.allclose(dense_pauli(PauliString.from_label("Y")), Y)
    assert np.allclose(dense_pauli(PauliString.from_label("Z")), Z)


def test_qubit_zero_is_least_significant():
    # label "XI" acts with X on the leftmost (highest) qubit
    p = PauliString.from_label("XI")
    mat = dense_pauli(p)
    expected = np.kron(dense_pauli(PauliString.from_label("X")),
                       np.eye(2))
    assert np.allclose(mat, expected)


@settings(max_examples=200, deadline=None)
@given(pauli_strings, pauli_strings)
def test_product_matches_dense(a, b):
    if a.n_qubits != b.n_qubits:
        return
    c = pauli_product(a, b)
    assert np.allclose(dense_pauli(c), dense_pauli(a) @ dense_pauli(b), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(pauli_strings)
def test_self_product_is_identity_up_to_phase(p):
    sq = pauli_product(p, p)
    assert sq.x_mask == 0 and sq.z_mask == 0
    # P^2 = (i^phase_exp)^2 * I for a bare string
    assert np.allclose(dense_pauli(sq), dense_pauli(p) @ dense_pauli(p))


@settings(max_examples=100, deadline=None)
@given(pauli_strings)
def test_strings_unitary_and_hermitian_up_to_phase(p):
    m = dense_pauli(p)
    assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(pauli_strings, st.integers(0, 15))
def test_apply_basis_matches_dense_column(p, b):
    b %= 2**p.n_qubits
    img, ph = pauli_apply_basis(p, b)
    col = dense_pauli(p)[:, b]
    expected = np.zeros(2**p.n_qubits, dtype=complex)
    expected[img] = ph
    assert np.allclose(col, expected, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(pauli_strings)
def test_apply_state_matches_dense(p):
    rng = np.random.default_rng(p.x_mask * 16 + p.z_mask)
    psi = rng.normal(size=2**p.n_qubits) + 1j * rng.normal(size=2**p.n_qubits)
    assert np.allclose(pauli_apply_state(p, psi), dense_pauli(p) @ psi, atol=1e-12)


def test_parse_coefficient_variants():
    t = 0.7
    c = parse_coefficient({"variant": "constant", "value": 2.5})
    assert c(t) == 2.5
    c = parse_coefficient({"variant": "polynomial", "coeffs": [1.0, -2.0, 3.0]})
    assert np.isclose(c(t), 1.0 - 2.0 * t + 3.0 * t * t)
    c = parse_coefficient({"variant": "trig", "kind": "cos", "amplitude": 2.0,
                           "frequency": 3.0, "phase": 0.5})
    assert np.isclose(c(t), 2.0 * np.cos(3.0 * t + 0.5))
    c = parse_coefficient({"variant": "gaussian", "amplitude": 1.5,
                           "center": 1.0, "width": 0.5})
    assert np.isclose(c(t), 1.5 * np.exp(-((t - 1.0) ** 2) / (2 * 0.5**2)))
    c = parse_coefficient({"variant": "expression", "text": "2*sin(t) + t^2"})
    assert np.isclose(c(t), 2 * np.sin(t) + t * t)


def test_parse_spline_table_interpolates():
    ts = np.linspace(0, 2, 21)
    vals = np.sin(ts)
    c = parse_coefficient({"variant": "spline_table", "times": list(ts),
                           "values": list(vals)})
    assert np.isclose(c(0.73), np.sin(0.73), atol=1e-4)


def test_parse_coefficient_rejects_unknown_variant():
    with pytest.raises(CoefficientError):
        parse_coefficient({"variant": "wavelet"})


def test_hamiltonian_merges_duplicate_strings():
    terms = (
        (parse_coefficient({"variant": "constant", "value": 1.0}),
         PauliString.from_label("Z")),
        (parse_coefficient({"variant": "constant", "value": 2.0}),
         PauliString.from_label("Z")),
    )
    H = LcuHamiltonian(n_qubits=1, terms=terms, horizon=1.0)
    assert H.n_terms == 1
    assert np.allclose(eval_coefficients(H, 0.3), [3.0])


def test_dense_hamiltonian_is_hermitian():
    terms = (
        (parse_coefficient({"variant": "trig", "kind": "cos", "amplitude": 0.4,
                            "frequency": 2.0}),
         PauliString.from_label("XY")),
        (parse_coefficient({"variant": "constant", "value": 0.9}),
         PauliString.from_label("ZI")),
    )
    H = LcuHamiltonian(n_qubits=2, terms=terms, horizon=2.0)
    for t in (0.0, 0.5, 1.9):
        m = dense_hamiltonian(H, t)
        assert np.allclose(m, m.conj().T, atol=1e-12)
