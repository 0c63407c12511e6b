"""Time segmentation and Chebyshev collocation machinery.

Nodes are Chebyshev-Gauss-Lobatto points t'_l = cos(l pi / n). The
interpolation matrix P maps coefficients to nodal values and D maps
Chebyshev coefficients of a function to those of its derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChebyshevGrid",
    "Segmentation",
    "RescaledInterval",
    "build_chebyshev_grid",
    "segment_uniform",
    "segment_adaptive",
    "rescale_interval",
    "eval_expansion",
    "SegmentationError",
    "spectral_norm",
]

DEFAULT_SAMPLES_PER_UNIT = 64


class SegmentationError(ValueError):
    """Infeasible or malformed time segmentation."""


@dataclass(frozen=True)
class ChebyshevGrid:
    degree: int
    nodes: np.ndarray  # (n+1,), nodes[0] = 1, nodes[n] = -1
    P: np.ndarray  # (n+1, n+1), [P]_{l,k} = cos(k l pi / n)
    D: np.ndarray  # (n+1, n+1), strictly upper triangular


@dataclass(frozen=True)
class Segmentation:
    boundaries: np.ndarray  # (N_tau + 1,), strictly increasing, [0 .. T]
    mode: str  # "uniform" | "adaptive"

    @property
    def n_tau(self) -> int:
        return self.boundaries.size - 1

    @property
    def horizon(self) -> float:
        return float(self.boundaries[-1])

    def to_json_list(self) -> list[float]:
        return [float(b) for b in self.boundaries]


@dataclass(frozen=True)
class RescaledInterval:
    """Interval [T_h, T_{h+1}] mapped onto the canonical domain [-1, 1].

    t(t') = T_h + (1 - t') (T_{h+1} - T_h) / 2, so t(1) = T_h and
    t(-1) = T_{h+1}; the dynamics prefactor (T_h - T_{h+1})/2 is
    negative, compensating the orientation reversal.
    """

    index: int
    start: float
    end: float
    _a_fn: object  # callable t -> matrix

    @property
    def width(self) -> float:
        return self.end - self.start

    @property
    def prefactor(self) -> float:
        return (self.start - self.end) / 2.0

    def t_of(self, tp: float) -> float:
        return self.start + (1.0 - tp) * (self.end - self.start) / 2.0

    def tp_of(self, t: float) -> float:
        return 1.0 - 2.0 * (t - self.start) / (self.end - self.start)

    def a_h(self, tp: float) -> np.ndarray:
        return self.prefactor * np.asarray(self._a_fn(self.t_of(tp)))


def build_chebyshev_grid(n: int) -> ChebyshevGrid:
    """Degree-n collocation grid with P and D matrices."""
    if n < 1:
        raise ValueError("degree must be >= 1 (n = 0 is degenerate collocation)")
    l = np.arange(n + 1)
    nodes = np.cos(l * np.pi / n)
    P = np.cos(np.outer(l, l) * np.pi / n)
    D = np.zeros((n + 1, n + 1))
    sigma = np.ones(n + 1)
    sigma[0] = 2.0
    for k in range(n + 1):
        for m in range(k + 1, n + 1):
            if (k + m) % 2 == 1:
                D[k, m] = 2.0 * m / sigma[k]
    return ChebyshevGrid(degree=n, nodes=nodes, P=P, D=D)


def spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value, by dense SVD."""
    return float(np.linalg.svd(np.atleast_2d(mat), compute_uv=False)[0])


def _norm_samples(T: float, a_fn, samples: int) -> np.ndarray:
    ts = np.linspace(0.0, T, samples)
    vals = np.array([spectral_norm(a_fn(t)) for t in ts])
    if not np.all(np.isfinite(vals)):
        raise SegmentationError("non-finite norm sample of A(t)")
    return vals


def default_samples(T: float) -> int:
    return max(2, int(np.ceil(T * DEFAULT_SAMPLES_PER_UNIT)))


def segment_uniform(T: float, a_fn, samples: int) -> Segmentation:
    """Equally spaced boundaries with N_tau = ceil((T/2) max ||A||)."""
    if T <= 0:
        raise SegmentationError("horizon must be positive")
    if samples < 2:
        raise SegmentationError("need at least 2 norm samples")
    max_norm = float(np.max(_norm_samples(T, a_fn, samples)))
    n_tau = max(1, int(np.ceil(T * max_norm / 2.0)))
    return Segmentation(boundaries=np.linspace(0.0, T, n_tau + 1), mode="uniform")


def _adaptive_simpson(f, a: float, b: float, tol: float, depth: int = 48):
    """Classic adaptive Simpson quadrature with Richardson acceptance."""
    fa, fm, fb = f(a), f((a + b) / 2), f(b)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth <= 0:
            raise SegmentationError("adaptive Simpson recursion limit reached")
        if abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (
            recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1)
        )

    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    if a == b:
        return 0.0
    return recurse(a, b, fa, fm, fb, whole, tol, depth)


def segment_adaptive(
    T: float,
    a_fn,
    n_tau: int,
    quad_tol: float = 1e-10,
    bisect_tol: float = 1e-12,
) -> Segmentation:
    """Boundaries carrying equal cumulative integral of ||A(t)||/2.

    Each segment mass is checked against the <= 1 feasibility bound; an
    infeasible request reports the minimal feasible n_tau.
    """
    if n_tau < 1:
        raise SegmentationError("n_tau must be >= 1")
    if T <= 0:
        raise SegmentationError("horizon must be positive")

    cache: dict[float, float] = {}

    def integrand(t: float) -> float:
        v = cache.get(t)
        if v is None:
            v = 0.5 * spectral_norm(a_fn(t))
            if not np.isfinite(v):
                raise SegmentationError(f"non-finite norm at t={t}")
            cache[t] = v
        return v

    total = _adaptive_simpson(integrand, 0.0, T, quad_tol)
    per_segment = total / n_tau
    if per_segment > 1.0 + 1e-12:
        minimal = int(np.ceil(total))
        raise SegmentationError(
            f"per-segment integral {per_segment:.6g} exceeds 1; minimal feasible n_tau is {minimal}"
        )

    boundaries = [0.0]
    if total == 0.0:
        boundaries = np.linspace(0.0, T, n_tau + 1)
        return Segmentation(boundaries=boundaries, mode="adaptive")

    for h in range(1, n_tau):
        target = per_segment  # mass from previous boundary
        lo, hi = boundaries[-1], T
        prev = boundaries[-1]
        while hi - lo > bisect_tol * max(1.0, T):
            mid = 0.5 * (lo + hi)
            mass = _adaptive_simpson(integrand, prev, mid, quad_tol)
            if mass < target:
                lo = mid
            else:
                hi = mid
        boundaries.append(0.5 * (lo + hi))
    boundaries.append(T)
    boundaries = np.array(boundaries)
    if not np.all(np.diff(boundaries) > 0):
        raise SegmentationError("adaptive boundaries are not strictly increasing")
    return Segmentation(boundaries=boundaries, mode="adaptive")


def rescale_interval(seg: Segmentation, h: int, a_fn) -> RescaledInterval:
    """Rescale segment h to the canonical Chebyshev domain."""
    if not 0 <= h < seg.n_tau:
        raise IndexError(f"interval index {h} out of range 0..{seg.n_tau - 1}")
    return RescaledInterval(
        index=h,
        start=float(seg.boundaries[h]),
        end=float(seg.boundaries[h + 1]),
        _a_fn=a_fn,
    )


def eval_expansion(c: np.ndarray, tp) -> np.ndarray:
    """Clenshaw evaluation of sum_k c_k T_k(t') for t' in [-1, 1].

    Works on the trailing axis of c, so a (N_alpha, n+1) coefficient
    block evaluates all components at once.
    """
    tp_arr = np.asarray(tp, dtype=float)
    if np.any(tp_arr < -1 - 1e-12) or np.any(tp_arr > 1 + 1e-12):
        raise ValueError("t' outside [-1, 1]")
    c = np.asarray(c)
    b1 = np.zeros(np.broadcast_shapes(c.shape[:-1], tp_arr.shape), dtype=c.dtype)
    b2 = np.zeros_like(b1)
    x2 = 2.0 * tp_arr
    for k in range(c.shape[-1] - 1, 0, -1):
        b1, b2 = c[..., k] + x2 * b1 - b2, b1
    return c[..., 0] + tp_arr * b1 - b2
