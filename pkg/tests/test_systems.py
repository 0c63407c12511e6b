"""Linear-system assembly, decoding, and the end-to-end spectral pipeline."""

import numpy as np
import pytest

from chronospec.spectral import Segmentation, build_chebyshev_grid, rescale_interval
from chronospec.systems import (
    SingularMatrixError,
    assemble_continuity_block,
    assemble_global,
    assemble_sequential_step,
    decode_sequential_step,
    estimate_resources,
    residual_norm,
    run_pipeline,
    solve_direct,
)
from chronospec.oracle import integrate_reduced_ode


class _ConstantDynamics:
    """Minimal stand-in exposing the ReducedDynamics call surface."""

    def __init__(self, A):
        self._A = np.asarray(A, dtype=complex)
        self.size = self._A.shape[0]

    def a_matrix(self, t):
        return self._A


def _rotation_dynamics(w=1.1):
    return _ConstantDynamics([[0.0, -w], [w, 0.0]])


def test_solve_direct_matches_numpy():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    b = rng.normal(size=12) + 1j * rng.normal(size=12)
    x = solve_direct(m, b)
    assert np.allclose(x, np.linalg.solve(m, b), atol=1e-10)
    assert residual_norm(m, x, b) < 1e-12


def test_solve_direct_raises_on_singular():
    m = np.ones((3, 3), dtype=complex)
    with pytest.raises(SingularMatrixError):
        solve_direct(m, np.ones(3, dtype=complex))


def test_continuity_block_extracts_left_endpoint():
    n, n_alpha = 5, 3
    L3 = assemble_continuity_block(n_alpha, n)
    rng = np.random.default_rng(5)
    c = rng.normal(size=(n_alpha, n + 1))
    # value at t' = -1 is sum_k (-1)^k c_k
    endpoint = (c * (-1.0) ** np.arange(n + 1)).sum(axis=1)
    out = (L3 @ c.reshape(-1)).reshape(n_alpha, n + 1)
    assert np.allclose(out[:, 0], endpoint)
    assert np.allclose(out[:, 1:], 0.0)


def test_global_dimensions_and_block_structure():
    rd = _rotation_dynamics()
    seg = Segmentation(boundaries=np.linspace(0.0, 2.0, 4), mode="uniform")
    grid = build_chebyshev_grid(4)
    alpha0 = np.array([1.0, 0.0], dtype=complex)
    sys_ = assemble_global(rd, seg, grid, alpha0)
    bsz = 2 * 5
    assert sys_.dimension == 3 * bsz
    # strictly block lower bidiagonal: blocks above the diagonal vanish
    m = sys_.matrix
    assert np.allclose(m[:bsz, bsz:], 0.0)
    assert np.allclose(m[bsz:2 * bsz, 2 * bsz:], 0.0)


def test_sequential_step_block_structure():
    rd = _rotation_dynamics()
    seg = Segmentation(boundaries=np.linspace(0.0, 2.0, 4), mode="uniform")
    grid = build_chebyshev_grid(4)
    iv = rescale_interval(seg, 0, rd.a_matrix)
    step = assemble_sequential_step(iv, grid, np.array([1.0, 0.0], dtype=complex))
    bsz = 2 * 5
    assert step.dimension == 2 * bsz
    # top-right block is zero, bottom-right is the identity
    assert np.allclose(step.matrix[:bsz, bsz:], 0.0)
    assert np.allclose(step.matrix[bsz:, bsz:], np.eye(bsz))


def test_pipeline_matches_exact_rotation():
    w = 1.1
    rd = _rotation_dynamics(w)
    alpha0 = np.array([1.0, 0.0], dtype=complex)
    T = 2.0
    sol, diag = run_pipeline(rd, alpha0, T, mode="global", n=10, n_tau=2)
    exact = np.array([np.cos(w * T), np.sin(w * T)])
    assert np.allclose(sol.endpoints[-1], exact, atol=1e-10)
    assert diag["n_tau"] == 2 and diag["degree"] == 10


def test_global_and_sequential_agree_on_random_dynamics():
    rng = np.random.default_rng(7)
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    A = G - G.conj().T  # anti-Hermitian: norm-preserving flow
    rd = _ConstantDynamics(A)
    alpha0 = np.zeros(3, dtype=complex)
    alpha0[0] = 1.0
    sg, _ = run_pipeline(rd, alpha0, 1.0, mode="global", n=8, n_tau=3)
    ss, _ = run_pipeline(rd, alpha0, 1.0, mode="sequential", n=8, n_tau=3)
    assert np.max(np.abs(sg.endpoints - ss.endpoints)) < 1e-12
    ref = integrate_reduced_ode(rd.a_matrix, alpha0, 1.0)
    assert np.allclose(sg.endpoints[-1], ref.endpoint(), atol=1e-9)


def test_sample_is_continuous_across_boundaries():
    rd = _rotation_dynamics()
    alpha0 = np.array([1.0, 0.0], dtype=complex)
    sol, _ = run_pipeline(rd, alpha0, 3.0, mode="global", n=9, n_tau=3)
    b = sol.segmentation.boundaries[1]
    left = sol.sample([b - 1e-9])[0]
    right = sol.sample([b + 1e-9])[0]
    assert np.allclose(left, right, atol=1e-6)


def test_renormalize_global_option():
    rd = _rotation_dynamics()
    alpha0 = np.array([1.0, 0.0], dtype=complex)
    sol, _ = run_pipeline(rd, alpha0, 3.0, mode="global", n=6, n_tau=3,
                          renormalize_global=True)
    assert np.allclose(np.linalg.norm(sol.endpoints, axis=1), 1.0, atol=1e-12)


def test_decode_sequential_consistency():
    rd = _rotation_dynamics()
    seg = Segmentation(boundaries=np.linspace(0.0, 2.0, 3), mode="uniform")
    grid = build_chebyshev_grid(6)
    iv = rescale_interval(seg, 0, rd.a_matrix)
    alpha0 = np.array([1.0, 0.0], dtype=complex)
    step = assemble_sequential_step(iv, grid, alpha0)
    x = solve_direct(step.matrix, step.rhs)
    c, endpoint, norm = decode_sequential_step(x, step)
    assert c.shape == (2, 7)
    assert np.isclose(np.linalg.norm(endpoint), norm)
    # endpoint reproduces the Chebyshev sum at t' = -1
    assert np.allclose(endpoint, (c * (-1.0) ** np.arange(7)).sum(axis=1))


def test_resource_estimates_reject_bad_input():
    with pytest.raises(ValueError):
        estimate_resources(0, 4, 4, "global")
    with pytest.raises(ValueError):
        estimate_resources(4, 4, 4, "diagonal")
