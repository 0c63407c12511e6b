"""Block encodings, polynomial targets, phase fitting, and the QSVT solver."""

import numpy as np
import pytest

from chronospec.qsvt import (
    PhaseFitError,
    PolynomialError,
    TargetPolynomial,
    apply_qsvt_sequence,
    build_block_encoding,
    build_inverse_polynomial,
    compute_phase_factors,
    minimal_inverse_polynomial,
    qsp_response,
    qsvt_solve,
)


def _random_matrix(rng, n, m=None):
    m = m or n
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def test_block_encoding_embeds_normalized_matrix():
    rng = np.random.default_rng(0)
    L = _random_matrix(rng, 6)
    be = build_block_encoding(L)
    n = L.shape[0]
    U = be.embedded
    assert np.allclose(U @ U.conj().T, np.eye(2 * n), atol=1e-12)
    assert np.allclose(U[:n, :n] * be.normalization, L, atol=1e-12)
    assert np.isclose(be.normalization, np.linalg.norm(L, 2))


def test_inverse_polynomial_approximates_reciprocal():
    kappa, eps = 4.0, 1e-4
    poly = build_inverse_polynomial(kappa, eps)
    xs = np.linspace(1.0 / kappa, 1.0, 500)
    err = np.max(np.abs(poly(xs) - poly.scale / xs))
    assert err <= eps * poly.scale * 1.5
    assert np.max(np.abs(poly(np.linspace(-1, 1, 2001)))) <= 1.0
    assert poly.degree % 2 == 1  # odd parity


def test_inverse_polynomial_is_odd():
    poly = build_inverse_polynomial(3.0, 1e-3)
    xs = np.linspace(0.05, 1.0, 50)
    assert np.allclose(poly(xs), -poly(-xs), atol=1e-14)


def test_minimal_polynomial_not_larger_than_default():
    for kappa in (2.0, 6.0):
        d_min = minimal_inverse_polynomial(kappa, 1e-4).degree
        d_def = build_inverse_polynomial(kappa, 1e-4).degree
        assert d_min <= d_def


def test_inverse_polynomial_rejects_bad_args():
    with pytest.raises(PolynomialError):
        build_inverse_polynomial(0.5, 1e-4)
    with pytest.raises(PolynomialError):
        build_inverse_polynomial(4.0, 0.0)


def test_phase_fit_monomial():
    # P(x) = x is one reflection with no extra rotation
    poly = TargetPolynomial(cheb_coeffs=np.array([0.0, 1.0]))
    seq = compute_phase_factors(poly)
    xs = np.linspace(-1, 1, 101)
    assert np.max(np.abs(qsp_response(seq, xs).real - xs)) < 1e-8


def test_phase_fit_chebyshev_t3():
    poly = TargetPolynomial(cheb_coeffs=np.array([0.0, 0.0, 0.0, 1.0]))
    seq = compute_phase_factors(poly)
    xs = np.linspace(-1, 1, 301)
    target = np.polynomial.chebyshev.chebval(xs, poly.cheb_coeffs)
    assert np.max(np.abs(qsp_response(seq, xs).real - target)) < 1e-8
    assert seq.degree == 3


def test_phase_fit_small_inverse():
    poly = build_inverse_polynomial(2.0, 1e-3)
    seq = compute_phase_factors(poly)
    xs = np.linspace(-1, 1, 401)
    assert np.max(np.abs(qsp_response(seq, xs).real - poly(xs))) < 1e-9


def test_qsvt_sequence_applies_polynomial_of_singular_values():
    rng = np.random.default_rng(2)
    L = _random_matrix(rng, 5)
    L /= np.linalg.norm(L, 2) * 1.5  # keep singular values inside (0, 1)
    be = build_block_encoding(L)
    poly = TargetPolynomial(cheb_coeffs=np.array([0.0, 0.0, 0.0, 1.0]))
    seq = compute_phase_factors(poly)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    v /= np.linalg.norm(v)
    state = np.concatenate([v, np.zeros(5)])
    out = apply_qsvt_sequence(be, seq, state)
    u, s, wh = np.linalg.svd(be.embedded[:5, :5])
    expected = u @ np.diag(np.polynomial.chebyshev.chebval(s, poly.cheb_coeffs)) @ wh @ v
    assert np.allclose(out[:5].real, expected.real, atol=1e-8)


def test_ideal_solve_matches_direct():
    rng = np.random.default_rng(4)
    A = _random_matrix(rng, 8) + 4.0 * np.eye(8)
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    eps = 1e-6
    run = qsvt_solve(A, b, epsilon=eps)
    exact = np.linalg.solve(A, b)
    rel = np.linalg.norm(run.output - exact) / np.linalg.norm(exact)
    assert rel <= 5 * eps
    assert run.kappa <= 100


def test_circuit_solve_small_system():
    rng = np.random.default_rng(6)
    A = _random_matrix(rng, 4) + 3.0 * np.eye(4)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    eps = 1e-4
    run = qsvt_solve(A, b, epsilon=eps, mode="circuit")
    exact = np.linalg.solve(A, b)
    rel = np.linalg.norm(run.output - exact) / np.linalg.norm(exact)
    assert rel <= 5 * eps
    assert 0.0 < run.success_probability <= 1.0


def test_qsvt_solve_rejects_unknown_mode():
    with pytest.raises(ValueError):
        qsvt_solve(np.eye(2), np.ones(2), mode="analog")
