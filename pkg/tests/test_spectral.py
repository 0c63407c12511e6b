"""Chebyshev grids, interval rescaling, and segmentation rules."""

import numpy as np
import pytest

from chronospec.spectral import (
    SegmentationError,
    build_chebyshev_grid,
    default_samples,
    eval_expansion,
    rescale_interval,
    segment_adaptive,
    segment_uniform,
    spectral_norm,
)


def test_nodes_are_gauss_lobatto():
    n = 8
    grid = build_chebyshev_grid(n)
    expected = np.cos(np.arange(n + 1) * np.pi / n)
    assert np.allclose(grid.nodes, expected, atol=1e-14)


def test_interpolation_matrix_evaluates_chebyshev_polys():
    n = 6
    grid = build_chebyshev_grid(n)
    # column k of P is T_k at the nodes
    for k in range(n + 1):
        assert np.allclose(grid.P[:, k], np.cos(k * np.arange(n + 1) * np.pi / n),
                           atol=1e-13)


def test_differentiation_matrix_on_monomials():
    """D acting on Chebyshev coefficients of x^m gives coefficients of m x^(m-1)."""
    n = 10
    grid = build_chebyshev_grid(n)
    xs = np.linspace(-1, 1, 200)
    for m in range(1, 6):
        c = np.polynomial.chebyshev.poly2cheb([0.0] * m + [1.0])
        c = np.pad(c, (0, n + 1 - c.size))
        dc = grid.D @ c
        deriv = np.polynomial.chebyshev.chebval(xs, dc)
        assert np.allclose(deriv, m * xs ** (m - 1), atol=1e-10)


def test_differentiation_matrix_is_strictly_upper_triangular():
    grid = build_chebyshev_grid(7)
    assert np.allclose(np.tril(grid.D), 0.0)


def test_eval_expansion_matches_chebval():
    rng = np.random.default_rng(11)
    c = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    tp = np.linspace(-1, 1, 17)
    for j in range(3):
        vals = np.array([eval_expansion(c[:, j], x) for x in tp])
        assert np.allclose(vals, np.polynomial.chebyshev.chebval(tp, c[:, j]),
                           atol=1e-12)


def _bump_a(t):
    g = 0.9 * np.exp(-((t - 5.0) ** 2) / 2.0)
    return np.array([[0.0, g], [-g, 0.0]])


def test_uniform_segmentation_satisfies_interval_bound():
    T = 10.0
    seg = segment_uniform(T, _bump_a, default_samples(T))
    widths = np.diff(seg.boundaries)
    max_norm = max(spectral_norm(_bump_a(t)) for t in np.linspace(0, T, 400))
    assert np.all(widths * max_norm / 2.0 <= 1.0 + 1e-9)
    assert seg.boundaries[0] == 0.0 and seg.boundaries[-1] == T


def test_adaptive_segmentation_equalizes_mass():
    from scipy.integrate import quad
    T = 10.0
    seg = segment_adaptive(T, _bump_a, 4)
    masses = [quad(lambda t: 0.5 * spectral_norm(_bump_a(t)), a, b, limit=200)[0]
              for a, b in zip(seg.boundaries[:-1], seg.boundaries[1:])]
    masses = np.array(masses)
    assert np.all(masses <= 1.0 + 1e-9)
    assert (masses.max() - masses.min()) / masses.mean() < 1e-7


def test_adaptive_rejects_infeasible_budget():
    strong = lambda t: 10.0 * np.eye(2) * np.sign(1.0)  # ||A|| = 10 constant
    with pytest.raises(SegmentationError):
        segment_adaptive(4.0, lambda t: 10.0 * np.eye(2), 3)  # needs >= 20


def test_rescale_interval_round_trip():
    T = 10.0
    seg = segment_uniform(T, _bump_a, default_samples(T))
    iv = rescale_interval(seg, 1, _bump_a)
    # t' = +1 is the interval start, t' = -1 the end (time reversal convention
    # checked via the midpoint)
    mid = iv.t_of(0.0)
    assert seg.boundaries[1] < mid < seg.boundaries[2]
    assert np.isclose(iv.tp_of(mid), 0.0, atol=1e-12)
    assert np.allclose(iv.a_h(0.3), iv.prefactor * _bump_a(iv.t_of(0.3)))
