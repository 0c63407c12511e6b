"""Assembly and solution of the collocation linear systems.

Two formulations:

* global: one block lower-triangular system over all intervals, blocks
  of size N_alpha (n+1), sub-diagonal continuity blocks -L3;
* sequential: per interval a 2x2-block system indexed by one extra
  qubit, whose |1> block exposes the interval endpoint.

Flat index layout is (interval h) x (component i) x (order k)
everywhere, i.e. flat = h*N_alpha*(n+1) + i*(n+1) + k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .spectral import (
    ChebyshevGrid,
    RescaledInterval,
    Segmentation,
    default_samples,
    eval_expansion,
    rescale_interval,
    segment_adaptive,
    segment_uniform,
)

__all__ = [
    "GlobalSystem",
    "SequentialStep",
    "SpectralSolution",
    "ResourceEstimate",
    "assemble_interval_block",
    "assemble_continuity_block",
    "assemble_global",
    "assemble_sequential_step",
    "solve_direct",
    "decode_solution",
    "run_pipeline",
    "estimate_resources",
    "SingularMatrixError",
]

SOLVERS = ("direct", "qsvt_ideal", "qsvt_circuit")


class SingularMatrixError(np.linalg.LinAlgError):
    """Pivot collapse in the direct LU solve."""


@dataclass(frozen=True)
class GlobalSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    n_tau: int
    n_alpha: int
    degree: int
    segmentation: Segmentation

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SequentialStep:
    matrix: np.ndarray
    rhs: np.ndarray
    index: int
    n_alpha: int
    degree: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralSolution:
    """Decoded Chebyshev coefficients and per-interval endpoints."""

    coefficients: np.ndarray  # (N_tau, N_alpha, n+1)
    endpoints: np.ndarray  # (N_tau, N_alpha), alpha at t' = -1, raw scale
    endpoint_norms: np.ndarray  # (N_tau,), norms before renormalization
    segmentation: Segmentation
    grid: ChebyshevGrid
    mode: str  # "global" | "sequential"

    @property
    def n_alpha(self) -> int:
        return self.coefficients.shape[1]

    @property
    def renormalized_endpoints(self) -> np.ndarray:
        return self.endpoints / self.endpoint_norms[:, None]

    def interval_of(self, t: float) -> int:
        b = self.segmentation.boundaries
        h = int(np.searchsorted(b, t, side="right") - 1)
        return min(max(h, 0), self.segmentation.n_tau - 1)

    def sample(self, times) -> np.ndarray:
        """Trajectory alpha(t) at the requested times, shape (m, N_alpha)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty((times.size, self.n_alpha), dtype=complex)
        b = self.segmentation.boundaries
        for j, t in enumerate(times):
            h = self.interval_of(t)
            tp = 1.0 - 2.0 * (t - b[h]) / (b[h + 1] - b[h])
            out[j] = eval_expansion(self.coefficients[h], np.clip(tp, -1.0, 1.0))
        return out

    def norm_drift(self, times) -> float:
        vals = self.sample(times)
        return float(np.max(np.abs(np.linalg.norm(vals, axis=1) - 1.0)))


@dataclass(frozen=True)
class ResourceEstimate:
    dimension: int
    qubit_count: int
    qlsa_invocations: int


def assemble_interval_block(interval: RescaledInterval, grid: ChebyshevGrid, n_alpha: int) -> np.ndarray:
    """Diagonal block L1 + L2(A_h) in the (component) x (order) layout.

    Row (i, 0) encodes the value condition at t' = 1; rows (i, l >= 1)
    encode derivative-minus-dynamics collocation at node l.
    """
    n = grid.degree
    P, D = grid.P, grid.D
    # L1 = I_{N_alpha} (x) (|0><0| P + sum_{l>=1} |l><l| P D)
    rows = np.empty_like(P)
    rows[0] = P[0]
    rows[1:] = (P @ D)[1:]
    L1 = np.kron(np.eye(n_alpha), rows).astype(complex)
    # L2 = - sum_{l>=1} A_h(t'_l) (x) |l><l| P
    L2 = np.zeros_like(L1)
    for l in range(1, n + 1):
        a_l = np.atleast_2d(interval.a_h(grid.nodes[l]))
        if a_l.shape != (n_alpha, n_alpha):
            raise ValueError(f"A_h has shape {a_l.shape}, expected ({n_alpha}, {n_alpha})")
        sel = np.zeros((n + 1, n + 1))
        sel[l] = P[l]
        L2 -= np.kron(a_l, sel)
    return L1 + L2


def assemble_continuity_block(n_alpha: int, n: int) -> np.ndarray:
    """L3 = sum_i sum_k (-1)^k |i><i| (x) |0><k| (endpoint extraction)."""
    row = (-1.0) ** np.arange(n + 1)
    block = np.zeros((n + 1, n + 1))
    block[0] = row
    return np.kron(np.eye(n_alpha), block).astype(complex)


def assemble_global(rd, seg: Segmentation, grid: ChebyshevGrid, alpha0: np.ndarray) -> GlobalSystem:
    """Block lower-triangular global system L|X> = |B>."""
    alpha0 = np.asarray(alpha0, dtype=complex)
    if np.linalg.norm(alpha0) == 0:
        raise ValueError("initial parameter vector must be nonzero")
    n_alpha = rd.size
    if alpha0.shape != (n_alpha,):
        raise ValueError("alpha0 dimension mismatch")
    n = grid.degree
    bsz = n_alpha * (n + 1)
    dim = seg.n_tau * bsz
    L = np.zeros((dim, dim), dtype=complex)
    L3 = assemble_continuity_block(n_alpha, n)
    for h in range(seg.n_tau):
        iv = rescale_interval(seg, h, rd.a_matrix)
        sl = slice(h * bsz, (h + 1) * bsz)
        L[sl, sl] = assemble_interval_block(iv, grid, n_alpha)
        if h >= 1:
            L[sl, (h - 1) * bsz:h * bsz] = -L3
    rhs = np.zeros(dim, dtype=complex)
    rhs[0:bsz:n + 1] = alpha0  # (h=0, i, k=0) slots
    return GlobalSystem(matrix=L, rhs=rhs, n_tau=seg.n_tau, n_alpha=n_alpha, degree=n, segmentation=seg)


def assemble_sequential_step(interval: RescaledInterval, grid: ChebyshevGrid, alpha_prev: np.ndarray) -> SequentialStep:
    """Single-interval system with the 2x2 index-qubit block structure."""
    alpha_prev = np.asarray(alpha_prev, dtype=complex)
    if np.linalg.norm(alpha_prev) == 0:
        raise ValueError("previous endpoint must be nonzero")
    n_alpha = alpha_prev.size
    n = grid.degree
    bsz = n_alpha * (n + 1)
    L = np.zeros((2 * bsz, 2 * bsz), dtype=complex)
    L[:bsz, :bsz] = assemble_interval_block(interval, grid, n_alpha)
    L[bsz:, :bsz] = -assemble_continuity_block(n_alpha, n)
    L[bsz:, bsz:] = np.eye(bsz)
    rhs = np.zeros(2 * bsz, dtype=complex)
    rhs[0:bsz:n + 1] = alpha_prev
    return SequentialStep(matrix=L, rhs=rhs, index=interval.index, n_alpha=n_alpha, degree=n)


def solve_direct(system_or_matrix, rhs=None) -> np.ndarray:
    """Dense LU with partial pivoting; raises on pivot collapse."""
    if rhs is None:
        matrix, rhs = system_or_matrix.matrix, system_or_matrix.rhs
    else:
        matrix = system_or_matrix
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if not np.all(np.isfinite(matrix)) or not np.all(np.isfinite(rhs)):
        raise ValueError("non-finite entries in linear system")
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    scale = np.max(np.abs(matrix))
    if np.min(np.abs(np.diag(lu))) < 1e-14 * scale:
        raise SingularMatrixError("numerically singular matrix in direct solve")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def residual_norm(matrix: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.linalg.norm(matrix @ x - rhs) / np.linalg.norm(rhs))


def decode_solution(x: np.ndarray, meta) -> SpectralSolution:
    """Reshape a raw solution vector into coefficients and endpoints.

    ``meta`` is the GlobalSystem or SequentialStep (plus segmentation
    and grid for the sequential case, see decode_sequential below).
    """
    if isinstance(meta, GlobalSystem):
        return _decode_global(x, meta)
    raise TypeError("decode_solution expects a GlobalSystem; use decode_sequential for steps")


def _decode_global(x, sys_: GlobalSystem, grid: ChebyshevGrid = None):
    n, n_alpha, n_tau = sys_.degree, sys_.n_alpha, sys_.n_tau
    if x.size != n_tau * n_alpha * (n + 1):
        raise ValueError("solution vector length mismatch")
    coeffs = x.reshape(n_tau, n_alpha, n + 1)
    signs = (-1.0) ** np.arange(n + 1)
    endpoints = coeffs @ signs
    norms = np.linalg.norm(endpoints, axis=1)
    if grid is None:
        grid = build_grid_cached(n)
    return SpectralSolution(
        coefficients=coeffs,
        endpoints=endpoints,
        endpoint_norms=norms,
        segmentation=sys_.segmentation,
        grid=grid,
        mode="global",
    )


def decode_sequential_step(x: np.ndarray, step: SequentialStep):
    """Split a sequential solution into (coefficients, endpoint, norm)."""
    bsz = step.n_alpha * (step.degree + 1)
    if x.size != 2 * bsz:
        raise ValueError("solution vector length mismatch")
    coeffs = x[:bsz].reshape(step.n_alpha, step.degree + 1)
    endpoint = x[bsz::step.degree + 1].copy()
    norm = float(np.linalg.norm(endpoint))
    return coeffs, endpoint, norm


_GRID_CACHE: dict[int, ChebyshevGrid] = {}


def build_grid_cached(n: int) -> ChebyshevGrid:
    grid = _GRID_CACHE.get(n)
    if grid is None:
        from .spectral import build_chebyshev_grid

        grid = build_chebyshev_grid(n)
        _GRID_CACHE[n] = grid
    return grid


def estimate_resources(n_tau: int, n_alpha: int, n: int, mode: str) -> ResourceEstimate:
    """Linear-system dimension, qubit count, and QLSA invocation count."""
    if min(n_tau, n_alpha, n) < 1:
        raise ValueError("all arguments must be positive integers")
    if mode == "global":
        dim = n_tau * n_alpha * (n + 1)
        return ResourceEstimate(dim, int(np.ceil(np.log2(dim))) + 1, 1)
    if mode == "sequential":
        dim = 2 * n_alpha * (n + 1)
        return ResourceEstimate(dim, int(np.ceil(np.log2(dim))) + 1, n_tau)
    raise ValueError(f"unknown mode {mode!r}")


def _solve_with(solver: str, matrix, rhs, epsilon, qsvt_context):
    """Dispatch one linear solve, returning (x, diag dict)."""
    if solver == "direct":
        x = solve_direct(matrix, rhs)
        return x, {"residual": residual_norm(matrix, x, rhs)}
    from . import qsvt

    run = qsvt.qsvt_solve(
        matrix,
        rhs,
        epsilon=epsilon,
        mode="ideal" if solver == "qsvt_ideal" else "circuit",
        context=qsvt_context,
    )
    diag = {
        "residual": run.residual,
        "kappa": run.kappa,
        "degree": run.degree,
        "success_probability": run.success_probability,
    }
    return run.output, diag


def run_pipeline(
    rd,
    alpha0,
    T: float,
    mode: str = "global",
    solver: str = "direct",
    n: int = 4,
    segmentation: str = "uniform",
    n_tau: int = None,
    epsilon: float = 1e-6,
    samples: int = None,
    renormalize_global: bool = False,
):
    """End-to-end spectral solve of d(alpha)/dt = A(t) alpha on [0, T].

    Returns (SpectralSolution, diagnostics). Global mode performs one
    solve; sequential mode iterates the intervals, feeding each raw
    endpoint forward (postselection norms are recorded per interval).
    """
    if mode not in ("global", "sequential"):
        raise ValueError(f"unknown mode {mode!r}")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    alpha0 = np.asarray(alpha0, dtype=complex)
    samples = samples if samples is not None else default_samples(T)
    if segmentation == "uniform":
        if n_tau is None:
            seg = segment_uniform(T, rd.a_matrix, samples)
        else:
            seg = Segmentation(boundaries=np.linspace(0.0, T, n_tau + 1), mode="uniform")
    elif segmentation == "adaptive":
        if n_tau is None:
            raise ValueError("adaptive segmentation requires n_tau")
        seg = segment_adaptive(T, rd.a_matrix, n_tau)
    else:
        raise ValueError(f"unknown segmentation {segmentation!r}")

    grid = build_grid_cached(n)
    diagnostics = {
        "mode": mode,
        "solver": solver,
        "degree": n,
        "n_tau": seg.n_tau,
        "segmentation": seg.mode,
        "boundaries": seg.to_json_list(),
        "solves": [],
    }
    qsvt_context: dict = {"epsilon": epsilon}

    if mode == "global":
        sys_ = assemble_global(rd, seg, grid, alpha0)
        try:
            x, diag = _solve_with(solver, sys_.matrix, sys_.rhs, epsilon, qsvt_context)
        except Exception as exc:
            raise RuntimeError(f"global solve failed: {exc}") from exc
        diag.setdefault("kappa", _condition_number(sys_.matrix))
        diagnostics["solves"].append(diag)
        sol = _decode_global(x, sys_, grid)
        if renormalize_global:
            coeffs = sol.coefficients / sol.endpoint_norms[:, None, None]
            sol = SpectralSolution(
                coefficients=coeffs,
                endpoints=sol.renormalized_endpoints,
                endpoint_norms=np.ones(seg.n_tau),
                segmentation=seg,
                grid=grid,
                mode="global",
            )
        return sol, diagnostics

    # sequential
    n_alpha = rd.size
    coeffs = np.empty((seg.n_tau, n_alpha, n + 1), dtype=complex)
    endpoints = np.empty((seg.n_tau, n_alpha), dtype=complex)
    norms = np.empty(seg.n_tau)
    alpha_prev = alpha0
    for h in range(seg.n_tau):
        iv = rescale_interval(seg, h, rd.a_matrix)
        step = assemble_sequential_step(iv, grid, alpha_prev)
        try:
            x, diag = _solve_with(solver, step.matrix, step.rhs, epsilon, qsvt_context)
        except Exception as exc:
            raise RuntimeError(f"sequential solve failed at interval {h}: {exc}") from exc
        diag.setdefault("kappa", _condition_number(step.matrix))
        diag["interval"] = h
        diagnostics["solves"].append(diag)
        c, endpoint, norm = decode_sequential_step(x, step)
        coeffs[h] = c
        endpoints[h] = endpoint
        norms[h] = norm
        alpha_prev = endpoint
    sol = SpectralSolution(
        coefficients=coeffs,
        endpoints=endpoints,
        endpoint_norms=norms,
        segmentation=seg,
        grid=grid,
        mode="sequential",
    )
    return sol, diagnostics


def _condition_number(matrix: np.ndarray) -> float:
    s = np.linalg.svd(matrix, compute_uv=False)
    return float(s[0] / s[-1])
