"""Classically emulated QSVT linear-system solver.

The solver block-encodes the (adjoint of the) system matrix, applies an
alternating projector-phased sequence realizing an odd polynomial
approximation of 1/x on the singular values, and postselects the
encoding ancilla. Two execution modes are provided:

* ideal: the polynomial is applied to the singular values directly
  through the SVD (no phases involved);
* circuit: the phased unitary sequence is applied to a statevector.
  The real target polynomial is realized exactly by averaging the
  sequences with phases +phi and -phi (a one-ancilla LCU trick); the
  residual imaginary part of a single sequence is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from numpy.polynomial import chebyshev as npcheb
from scipy.stats import binom

__all__ = [
    "BlockEncoding",
    "InversePolynomial",
    "PhaseSequence",
    "QsvtRun",
    "TargetPolynomial",
    "build_block_encoding",
    "build_inverse_polynomial",
    "compute_phase_factors",
    "qsp_response",
    "apply_qsvt_sequence",
    "qsvt_solve",
    "PhaseFitError",
    "PolynomialError",
]

DEFAULT_PHASE_TOL = 1e-10
DEFAULT_KAPPA_CAP = 1e6
MAXABS_GRID = 10_000
# headroom under the |P| <= 1 QSVT bound: polynomials whose extrema touch
# the bound make the phase-fit Jacobian rank-deficient, so cap well below
_BOUND_MARGIN = 0.1


class PolynomialError(ValueError):
    """Inverse-polynomial construction failure."""


class PhaseFitError(RuntimeError):
    """Phase-factor optimization did not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# Block encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockEncoding:
    """Unitary embedding U with top-left block L / alpha_enc."""

    embedded: np.ndarray  # (2N, 2N)
    normalization: float  # alpha_enc = sigma_max(L)
    source_dim: int

    @property
    def dimension(self) -> int:
        return self.embedded.shape[0]


def build_block_encoding(L: np.ndarray) -> BlockEncoding:
    """Exact block encoding built from the SVD of L."""
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("block encoding expects a square matrix")
    if not np.all(np.isfinite(L)):
        raise ValueError("non-finite entries")
    u, s, vh = np.linalg.svd(L)
    alpha = float(s[0])
    if alpha == 0.0:
        raise ValueError("cannot block-encode the zero matrix")
    comp = np.sqrt(np.clip(1.0 - (s / alpha) ** 2, 0.0, None))
    n = L.shape[0]
    U = np.empty((2 * n, 2 * n), dtype=complex)
    U[:n, :n] = L / alpha
    U[:n, n:] = (u * comp) @ u.conj().T  # sqrt(I - L L^dag / a^2)
    U[n:, :n] = (vh.conj().T * comp) @ vh  # sqrt(I - L^dag L / a^2)
    U[n:, n:] = -L.conj().T / alpha
    return BlockEncoding(embedded=U, normalization=alpha, source_dim=n)


# ---------------------------------------------------------------------------
# Polynomial targets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetPolynomial:
    """Definite-parity real polynomial given by full Chebyshev coefficients."""

    cheb_coeffs: np.ndarray

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.cheb_coeffs, dtype=float), "b")
        if c.size == 0:
            raise PolynomialError("zero polynomial has no definite degree")
        object.__setattr__(self, "cheb_coeffs", c)
        d = c.size - 1
        tail = c[(d % 2) ^ 1::2]
        if np.any(tail != 0.0):
            raise PolynomialError("polynomial does not have definite parity")

    @property
    def degree(self) -> int:
        return self.cheb_coeffs.size - 1

    @property
    def parity(self) -> int:
        return self.degree % 2

    def __call__(self, x):
        return npcheb.chebval(np.asarray(x, dtype=float), self.cheb_coeffs)


@dataclass(frozen=True)
class InversePolynomial:
    """Odd Chebyshev approximation of s/x on [x_min, 1], bounded by 1."""

    odd_coeffs: np.ndarray  # a_j multiplying T_{2j+1}, already scaled by s
    kappa: float
    epsilon: float
    scale: float  # s, the realized output scale (1/(2 kappa) unless capped)
    x_min: float
    error_bound: float  # measured uniform |P - s/x| on [x_min, 1]
    max_abs: float  # measured max |P| on [-1, 1]

    @property
    def degree(self) -> int:
        return 2 * (self.odd_coeffs.size - 1) + 1

    @property
    def parity(self) -> int:
        return 1

    @property
    def cheb_coeffs(self) -> np.ndarray:
        full = np.zeros(self.degree + 1)
        full[1::2] = self.odd_coeffs
        return full

    def __call__(self, x):
        return npcheb.chebval(np.asarray(x, dtype=float), self.cheb_coeffs)


def _binomial_series(b: int, J: int) -> np.ndarray:
    """Odd Chebyshev coefficients (for T_{2j+1}, j=0..J) of the degree-2b
    binomial smoothing of 1/x, truncated at order J."""
    js = np.arange(J + 1)
    return 4.0 * binom.sf(b + js, 2 * b, 0.5) * (-1.0) ** js


def _window_error(coeffs: np.ndarray, kappa: float, n_pts: int = 1200) -> float:
    """Max |C(x) - 1/x| on [1/kappa, 1] for an odd series approximating 1/x."""
    full = np.zeros(2 * coeffs.size)
    full[1::2] = coeffs
    window = np.linspace(1.0 / kappa, 1.0, n_pts)
    return float(np.max(np.abs(npcheb.chebval(window, full) - 1.0 / window)))


def _cks_parameters(kappa: float, epsilon: float) -> tuple[int, int]:
    """Smoothing order b and truncation J per the tail-bound prescription."""
    b = int(math.ceil(kappa ** 2 * math.log(2.0 * kappa / epsilon)))
    # generous coefficient window; tails decay like exp(-j^2/b)
    j_max = int(math.ceil(math.sqrt(b * (math.log(8.0 * (b + 4) / epsilon) + math.log(1.0 / epsilon) + 40)))) + 8
    mags = np.abs(_binomial_series(b, j_max))
    tails = np.concatenate([np.cumsum(mags[::-1])[::-1][1:], [0.0]])
    feasible = np.nonzero(tails <= epsilon)[0]
    if feasible.size == 0:
        raise PolynomialError("coefficient window exhausted before the tail bound was met")
    return b, int(feasible[0])


def _best_b_for_order(kappa: float, epsilon: float, J: int, b_hi: int) -> tuple[int, float]:
    """Smoothing order minimizing the measured window error at fixed J.

    The error is U-shaped in b (kernel bias falls, truncation error
    grows): coarse geometric scan, then local refinement.
    """
    candidates = sorted({max(1, int(round(b)))
                         for b in np.geomspace(max(1, J), max(2, b_hi), 12)})
    best_b, best_err = None, np.inf
    for b in candidates:
        err = _window_error(_binomial_series(b, J), kappa)
        if err < best_err:
            best_b, best_err = b, err
    lo, hi = max(1, best_b // 2), min(b_hi, best_b * 2)
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        e1 = _window_error(_binomial_series(m1, J), kappa)
        e2 = _window_error(_binomial_series(m2, J), kappa)
        if e1 <= e2:
            hi = m2
        else:
            lo = m1
        if min(e1, e2) < best_err:
            best_b, best_err = (m1, e1) if e1 <= e2 else (m2, e2)
    for b in range(lo, hi + 1):
        err = _window_error(_binomial_series(b, J), kappa)
        if err < best_err:
            best_b, best_err = b, err
    return best_b, best_err


def _finalize_inverse(coeffs: np.ndarray, kappa: float, epsilon: float) -> InversePolynomial:
    """Scale, cap, and measure an odd 1/x series into an InversePolynomial."""
    scale = 1.0 / (2.0 * kappa)
    scaled = coeffs * scale
    grid = np.linspace(-1.0, 1.0, MAXABS_GRID)
    full = np.zeros(2 * coeffs.size)
    full[1::2] = scaled
    max_abs = float(np.max(np.abs(npcheb.chebval(grid, full))))
    if max_abs > 1.0 - _BOUND_MARGIN:
        # cap the output scale so the bounded-polynomial constraint holds
        # with headroom; the shrink is undone by the classical rescale
        shrink = (1.0 - _BOUND_MARGIN) / max_abs
        scale *= shrink
        scaled = scaled * shrink
        full[1::2] = scaled
        max_abs = float(np.max(np.abs(npcheb.chebval(grid, full))))

    x_min = 1.0 / kappa
    window = np.linspace(x_min, 1.0, 4000)
    err = float(np.max(np.abs(npcheb.chebval(window, full) - scale / window)))
    return InversePolynomial(
        odd_coeffs=scaled,
        kappa=float(kappa),
        epsilon=float(epsilon),
        scale=scale,
        x_min=x_min,
        error_bound=err,
        max_abs=max_abs,
    )


def _check_inverse_args(kappa: float, epsilon: float) -> None:
    if kappa < 1.0:
        raise PolynomialError("kappa must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise PolynomialError("epsilon must lie in (0, 1)")
    if epsilon < 1e-13:
        raise PolynomialError("epsilon below the achievable floor of double precision")


def build_inverse_polynomial(kappa: float, epsilon: float) -> InversePolynomial:
    """Odd Chebyshev series for s/x, s = 1/(2 kappa), on [1/kappa, 1].

    Uses the binomial-kernel construction: the degree-(2b) smoothing of
    1/x has odd Chebyshev coefficients 4 (-1)^j Pr[Bin(2b, 1/2) > b+j]
    with b = ceil(kappa^2 ln(2 kappa / epsilon)); the series is
    truncated once the remaining coefficient mass is below epsilon
    (relative to the 1/x target, i.e. epsilon*s after scaling).
    """
    _check_inverse_args(kappa, epsilon)
    b, J = _cks_parameters(kappa, epsilon)
    return _finalize_inverse(_binomial_series(b, J), kappa, epsilon)


def minimal_inverse_polynomial(kappa: float, epsilon: float) -> InversePolynomial:
    """Lowest-degree member of the binomial-kernel family meeting epsilon.

    Bisects the truncation order, re-optimizing the smoothing order b at
    each candidate, with feasibility judged by the measured window error
    (relative to the realized scale). The tail-bound parameters are an
    upper bracket; the minimal degree is what circuit-mode solves use.
    """
    _check_inverse_args(kappa, epsilon)
    b_hi, J_hi = _cks_parameters(kappa, epsilon)
    lo, hi = 0, J_hi          # feasibility is monotone in J
    cache: dict[int, tuple[int, float]] = {J_hi: (b_hi, np.inf)}

    def feasible(J: int) -> bool:
        if J not in cache:
            cache[J] = _best_b_for_order(kappa, epsilon, J, b_hi)
        return cache[J][1] <= epsilon

    if not feasible(0):
        while lo < hi:
            mid = (lo + hi) // 2
            if feasible(mid):
                hi = mid
            else:
                lo = mid + 1
    else:
        hi = 0
    b = cache.get(hi, (b_hi, 0.0))[0] if hi in cache else b_hi
    return _finalize_inverse(_binomial_series(b, hi), kappa, epsilon)


def minimal_feasible_degree(kappa: float, epsilon: float) -> int:
    """Measured minimal polynomial degree achieving epsilon at this kappa."""
    return minimal_inverse_polynomial(kappa, epsilon).degree


# ---------------------------------------------------------------------------
# Phase factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSequence:
    phases: np.ndarray  # phi_1 .. phi_d
    parity: int
    residual: float  # max |Re response - target| on the fit grid

    @property
    def degree(self) -> int:
        return self.phases.size

    def to_json_list(self) -> list[float]:
        return [float(p) for p in self.phases]


def _scalar_units(x: np.ndarray) -> np.ndarray:
    """Batched 2x2 reflection encodings of scalars x, shape (m, 2, 2)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    U = np.empty(x.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = x
    U[..., 0, 1] = r
    U[..., 1, 0] = r
    U[..., 1, 1] = -x
    return U


def _phased_factors(phases: np.ndarray, units: np.ndarray):
    """All d phased factors Pi_{phi_k} U as four (d, m) component arrays.

    Each factor is diag(e^{i phi}, e^{-i phi}) @ [[x, r], [r, -x]];
    componentwise storage avoids tiny-matrix matmul overhead in the
    scans below.
    """
    e = np.exp(1j * phases)[:, None]
    x = units[np.newaxis, :, 0, 0]
    r = units[np.newaxis, :, 0, 1]
    return e * x, e * r, e.conj() * r, -e.conj() * x


def _prefix_components(fa, fb, fc, fd):
    """Prefix products of a 2x2 chain given componentwise, out[k] = M_0..M_{k-1}.

    Returns four (d+1, m) arrays with out[0] = I. Blocked two-level
    scan: ~2*sqrt(d) sequential sweeps over large batches instead of d
    sweeps over small ones, keeping the interpreter out of the inner
    loop for high-degree fits.
    """
    d, m = fa.shape
    block = max(1, int(np.ceil(np.sqrt(d))))
    groups = -(-d // block)

    def pad(comp, fill):
        out = np.full((groups * block, m), fill, dtype=complex)
        out[:d] = comp
        return out.reshape(groups, block, m)

    ca, cb, cc, cd = pad(fa, 1.0), pad(fb, 0.0), pad(fc, 0.0), pad(fd, 1.0)
    la, lb, lc, ld = ca.copy(), cb.copy(), cc.copy(), cd.copy()
    for j in range(1, block):       # local[g, j] = M_{gB} ... M_{gB+j}
        pa, pb, pc, pd = la[:, j - 1], lb[:, j - 1], lc[:, j - 1], ld[:, j - 1]
        la[:, j] = pa * ca[:, j] + pb * cc[:, j]
        lb[:, j] = pa * cb[:, j] + pb * cd[:, j]
        lc[:, j] = pc * ca[:, j] + pd * cc[:, j]
        ld[:, j] = pc * cb[:, j] + pd * cd[:, j]
    ga = np.empty((groups, m), dtype=complex)   # product of all groups < g
    gb = np.zeros((groups, m), dtype=complex)
    gc = np.zeros((groups, m), dtype=complex)
    gd = np.empty((groups, m), dtype=complex)
    ga[0], gd[0] = 1.0, 1.0
    for g in range(1, groups):
        pa, pb, pc, pd = ga[g - 1], gb[g - 1], gc[g - 1], gd[g - 1]
        qa, qb, qc, qd = la[g - 1, -1], lb[g - 1, -1], lc[g - 1, -1], ld[g - 1, -1]
        ga[g] = pa * qa + pb * qc
        gb[g] = pa * qb + pb * qd
        gc[g] = pc * qa + pd * qc
        gd[g] = pc * qb + pd * qd
    ga, gb, gc, gd = (z[:, None] for z in (ga, gb, gc, gd))

    def assemble(lead_r0, lead_r1, loc_top, loc_bot, fill):
        out = np.empty((d + 1, m), dtype=complex)
        out[0] = fill
        out[1:] = (lead_r0 * loc_top + lead_r1 * loc_bot).reshape(-1, m)[:d]
        return out

    return (assemble(ga, gb, la, lc, 1.0), assemble(ga, gb, lb, ld, 0.0),
            assemble(gc, gd, la, lc, 0.0), assemble(gc, gd, lb, ld, 1.0))


def _chain_products(phases: np.ndarray, units: np.ndarray):
    """Prefix products of Pi_{phi_k} U over the batch, shape (d+1, m, 2, 2).

    prefixes[k] is the product of the first k factors (prefixes[0] is
    the identity). The scalar encoding is Hermitian, so U and U^dag
    coincide and the alternation in the sequence definition is
    immaterial here.
    """
    pa, pb, pc, pd = _prefix_components(*_phased_factors(phases, units))
    out = np.empty(pa.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = pa
    out[..., 0, 1] = pb
    out[..., 1, 0] = pc
    out[..., 1, 1] = pd
    return out


def qsp_response(phases, x):
    """(0,0) entry of the alternating phased product for scalar x.

    Accepts a PhaseSequence or a raw phase array; x may be scalar or an
    array in [-1, 1]. An empty sequence returns 1.
    """
    phi = phases.phases if isinstance(phases, PhaseSequence) else np.asarray(phases, dtype=float)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(xs) > 1 + 1e-12):
        raise ValueError("|x| must be <= 1")
    if phi.size == 0:
        res = np.ones(xs.shape, dtype=complex)
    else:
        units = _scalar_units(xs)
        res = _prefix_components(*_phased_factors(phi, units))[0][-1]
    return res[0] if np.isscalar(x) or np.asarray(x).ndim == 0 else res


def _fit_grid(degree: int) -> np.ndarray:
    m = max(1, (degree + 1 + 1) // 2)
    j = np.arange(1, m + 1)
    return np.cos((2 * j - 1) * np.pi / (4 * m))


def _residual_and_jacobian(phi, units, target):
    """Misfit vector Re response - target and its Jacobian in phi."""
    d = phi.size
    fa, fb, fc, fd = _phased_factors(phi, units)
    pa, pb, _, _ = _prefix_components(fa, fb, fc, fd)  # pre[k] = M_0..M_{k-1}
    res = pa[-1].real - target
    # suffix products S_k = M_k ... M_{d-1} from the reversed-transposed
    # chain: with N_j = M_{d-1-j}^T, prefix Q[p] = N_0..N_{p-1} = S_{d-p}^T
    qa, qb, _, _ = _prefix_components(fa[::-1], fc[::-1], fb[::-1], fd[::-1])
    sa = qa[1:][::-1]   # S_k[0,0] = Q[d-k][0,0] for k = 0..d-1
    sc = qb[1:][::-1]   # S_k[1,0] = Q[d-k][0,1]
    # d(response)/d(phi_k) = [P_k (iZ) S_k]_{00}
    dresp = 1j * (pa[:d] * sa - pb[:d] * sc)
    return res, np.ascontiguousarray(dresp.real.T)


def _objective_and_grad(phi, units, target):
    res, jac = _residual_and_jacobian(phi, units, target)
    return float(res @ res), 2.0 * (jac.T @ res)


# --- symmetric-parametrization Newton solver ------------------------------
#
# The reflection-type chain maps onto the rotation (W) convention with
# d+1 phases, the last of which is free to absorb at the front since the
# (0,0) entry only feels the sum of the outer phases. In the W picture
# the palindromic phase ansatz makes the fit square (one free phase per
# grid point) and Newton converges in a handful of iterations from the
# standard (pi/4, 0, ..., 0, pi/4) start, which is where the production
# fits for high-degree inverse polynomials are done. Afterwards the
# phases are converted back:  phi_1 = 2 psi_0 - pi/2 + d pi/2,
# phi_{j+1} = psi_j - pi/2.

def _w_factor_components(psi: np.ndarray, x: np.ndarray):
    """Chain e^{i psi_0 Z} W ... e^{i psi_{d-1} Z} W e^{i psi_d Z} as d+1
    componentwise factors (the trailing pure phase is its own factor)."""
    d = psi.size - 1
    r = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    e = np.exp(1j * psi)[:, None]
    fa = np.empty((d + 1, x.size), dtype=complex)
    fb = np.empty_like(fa)
    fc = np.empty_like(fa)
    fd = np.empty_like(fa)
    fa[:d] = e[:d] * x
    fb[:d] = e[:d] * (1j * r)
    fc[:d] = e[:d].conj() * (1j * r)
    fd[:d] = e[:d].conj() * x
    fa[d], fb[d], fc[d], fd[d] = e[d], 0.0, 0.0, e[d].conj()
    return fa, fb, fc, fd


def _w_response_and_gradients(psi: np.ndarray, x: np.ndarray):
    """(0,0) of the W chain and its derivatives w.r.t. every psi_j."""
    fa, fb, fc, fd = _w_factor_components(psi, x)
    pa, pb, _, _ = _prefix_components(fa, fb, fc, fd)
    qa, qb, _, _ = _prefix_components(fa[::-1], fc[::-1], fb[::-1], fd[::-1])
    n = fa.shape[0]
    sa = qa[1:][::-1]
    sc = qb[1:][::-1]
    dresp = 1j * (pa[:n] * sa - pb[:n] * sc)
    return pa[-1], dresp


def _sym_expand(theta: np.ndarray, d: int) -> np.ndarray:
    """Palindromic d+1 phase vector from its free half."""
    if (d + 1) % 2 == 0:
        return np.concatenate([theta, theta[::-1]])
    return np.concatenate([theta, theta[:-1][::-1]])


def _sym_to_phases(theta: np.ndarray, d: int) -> np.ndarray:
    psi = _sym_expand(theta, d)
    phi = np.empty(d)
    phi[0] = 2.0 * psi[0] - np.pi / 2 + d * np.pi / 2
    phi[1:] = psi[1:d] - np.pi / 2
    return phi


def _newton_symmetric(xs, target, d, tol, max_iter=60):
    """Damped Newton on the square symmetric system; returns (phi, residual)."""
    m = (d + 2) // 2
    if xs.size != m:
        raise PhaseFitError("fit grid size does not match the symmetric ansatz")
    theta = np.zeros(m)
    theta[0] = np.pi / 4
    resp, dresp = _w_response_and_gradients(_sym_expand(theta, d), xs)
    res = resp.real - target
    for _ in range(max_iter):
        mx = float(np.max(np.abs(res)))
        if mx <= tol:
            return _sym_to_phases(theta, d), mx
        jac = dresp.real
        if (d + 1) % 2 == 0:
            jsym = jac[:m] + jac[d - np.arange(m)]
        else:
            jsym = jac[:m].copy()
            jsym[: m - 1] += jac[d - np.arange(m - 1)]
        try:
            delta = np.linalg.solve(jsym.T, -res)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(jsym.T, -res, rcond=None)
        nrm = np.linalg.norm(res)
        step = 1.0
        for _ in range(40):
            cand = theta + step * delta
            resp2, dresp2 = _w_response_and_gradients(_sym_expand(cand, d), xs)
            res2 = resp2.real - target
            if np.linalg.norm(res2) < nrm:
                break
            step *= 0.5
        else:
            return _sym_to_phases(theta, d), float(np.max(np.abs(res)))
        theta, res, dresp = cand, res2, dresp2
    return _sym_to_phases(theta, d), float(np.max(np.abs(res)))


def compute_phase_factors(poly, tol: float = DEFAULT_PHASE_TOL, max_iter: int = 20_000) -> PhaseSequence:
    """Fit phases so that Re qsp_response matches the target polynomial.

    Primary path: damped Newton on the palindromic (symmetric) phase
    parametrization, whose fit system is square; it typically converges
    in under ten iterations. Fallback: quasi-Newton (L-BFGS) descent of
    the squared misfit followed by a damped least-squares polish, tried
    from a small ladder of initializations.
    """
    d = poly.degree
    if d < 1:
        raise ValueError("target degree must be >= 1")
    xs = _fit_grid(d)
    target = np.asarray(poly(xs), dtype=float)
    if np.max(np.abs(npcheb.chebval(np.linspace(-1, 1, 2001), _full_cheb(poly)))) > 1.0 + 1e-9:
        raise PolynomialError("target polynomial exceeds 1 in magnitude on [-1, 1]")
    units = _scalar_units(xs)

    phi_newton, newton_res = _newton_symmetric(xs, target, d, tol)
    if newton_res <= tol:
        resid = float(np.max(np.abs(qsp_response(phi_newton, xs).real - target)))
        if resid <= tol:
            return PhaseSequence(phases=phi_newton, parity=d % 2, residual=resid)

    # Chebyshev-generator start (its response equals T_d exactly) first:
    # it sits in the right basin for smooth targets. Then the symmetric
    # start, then jittered variants for saddle escape.
    cheb_gen = np.full(d, -np.pi / 2)
    cheb_gen[0] += d * np.pi / 2
    if d == 1:
        sym = np.array([np.pi / 4])
    else:
        sym = np.concatenate([[np.pi / 4], np.full(d - 2, np.pi / 2), [np.pi / 4]])
    rng = np.random.default_rng(7)
    inits = [phi_newton, cheb_gen, sym,
             cheb_gen + 0.05 * rng.standard_normal(d),
             sym + 0.05 * rng.standard_normal(d)]

    best_phi, best = phi_newton, newton_res
    # cheap budgets first; escalate only if every start fails
    for lbfgs_iters, polish_nfev in ((min(max_iter, 500), 150), (max_iter, 400)):
        for phi0 in inits:
            result = scipy.optimize.minimize(
                _objective_and_grad,
                phi0,
                args=(units, target),
                jac=True,
                method="L-BFGS-B",
                options={"maxiter": lbfgs_iters, "ftol": 1e-18, "gtol": 1e-14, "maxcor": 40},
            )
            # damped least-squares polish (handles the rank-deficient
            # Jacobians that arise when the target touches the unit bound)
            polish = scipy.optimize.least_squares(
                lambda p: _residual_and_jacobian(p, units, target)[0],
                result.x,
                jac=lambda p: _residual_and_jacobian(p, units, target)[1],
                method="trf",
                tr_solver="lsmr",
                ftol=1e-15,
                xtol=1e-15,
                gtol=1e-15,
                max_nfev=polish_nfev,
            )
            mx = float(np.max(np.abs(polish.fun)))
            if mx < best:
                best_phi, best = polish.x, mx
            if best <= tol:
                break
        if best <= tol:
            break
    phi = best_phi
    resid = float(np.max(np.abs(qsp_response(phi, xs).real - target)))
    if resid > tol:
        raise PhaseFitError(
            f"phase optimization stalled: max grid error {resid:.3e} > tol {tol:.1e} (degree {d})"
        )
    return PhaseSequence(phases=phi, parity=d % 2, residual=resid)


def _full_cheb(poly) -> np.ndarray:
    if hasattr(poly, "cheb_coeffs"):
        return np.asarray(poly.cheb_coeffs, dtype=float)
    raise TypeError("polynomial target must expose cheb_coeffs")


# ---------------------------------------------------------------------------
# Sequence application and the solver
# ---------------------------------------------------------------------------

def apply_qsvt_sequence(be: BlockEncoding, phases, state: np.ndarray) -> np.ndarray:
    """Apply Pi_{phi_1} U ... Pi_{phi_d} U(dag alternating) to a state.

    The rightmost factor is always Pi_{phi_d} U; moving left the
    encodings alternate between U and U^dag. Pi_phi is the diagonal
    unitary exp(i phi (2 Pi - I)) with Pi projecting onto the top
    (encoding-ancilla |0>) block.
    """
    phi = phases.phases if isinstance(phases, PhaseSequence) else np.asarray(phases, dtype=float)
    state = np.asarray(state, dtype=complex)
    if state.shape != (be.dimension,):
        raise ValueError("state dimension does not match the block encoding")
    d = phi.size
    U = be.embedded
    Udag = U.conj().T
    n = be.source_dim
    out = state.copy()
    for k in range(d, 0, -1):
        mat = U if (d - k) % 2 == 0 else Udag
        out = mat @ out
        e = np.exp(1j * phi[k - 1])
        out[:n] *= e
        out[n:] *= e.conjugate()
    return out


@dataclass(frozen=True)
class QsvtRun:
    """Outcome of one emulated QSVT linear-system solve."""

    output: np.ndarray  # unnormalized solution estimate
    state: np.ndarray  # normalized solution state
    success_probability: float
    mode: str
    degree: int
    kappa: float
    residual: float
    phase_residual: float = 0.0
    imag_residual: float = 0.0


def _system_parts(system_or_matrix, rhs):
    if rhs is None:
        return np.asarray(system_or_matrix.matrix, dtype=complex), np.asarray(system_or_matrix.rhs, dtype=complex)
    return np.asarray(system_or_matrix, dtype=complex), np.asarray(rhs, dtype=complex)


def qsvt_solve(
    system_or_matrix,
    rhs=None,
    epsilon: float = 1e-6,
    mode: str = "ideal",
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    context: dict = None,
) -> QsvtRun:
    """Solve L x = b through the QSVT inverse-polynomial channel.

    ``context`` is an optional mutable cache (polynomial and phases are
    reused across calls that share it, keyed on a kappa upper bound).
    """
    L, b = _system_parts(system_or_matrix, rhs)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ValueError("right-hand side must be nonzero")
    if mode not in ("ideal", "circuit"):
        raise ValueError(f"unknown mode {mode!r}")

    u, s, vh = np.linalg.svd(L)
    alpha = float(s[0])
    kappa = float(s[0] / s[-1])
    if kappa > kappa_cap:
        raise ValueError(f"condition number {kappa:.3g} exceeds cap {kappa_cap:.3g}")

    poly, phases = _cached_poly(kappa, epsilon, mode, context)

    if mode == "ideal":
        # apply P to the normalized singular values through the SVD,
        # with the v/w swap that realizes the inverse orientation
        pvals = poly(s / alpha)
        y = vh.conj().T @ (pvals * (u.conj().T @ b))
        x = y / (poly.scale * alpha)
        run_p = float(np.linalg.norm(pvals * (u.conj().T @ (b / nb))) ** 2)
        imag_res = 0.0
        phase_res = 0.0
    else:
        # block-encode the adjoint so the transformed operator is
        # sum P(sigma) |w><v| ~ scale * L^{-1}
        be = build_block_encoding(L.conj().T)
        embedded = np.zeros(be.dimension, dtype=complex)
        embedded[: be.source_dim] = b / nb
        plus = apply_qsvt_sequence(be, phases.phases, embedded)
        minus = apply_qsvt_sequence(be, -phases.phases, embedded)
        avg = 0.5 * (plus + minus)
        top = avg[: be.source_dim]
        run_p = float(np.linalg.norm(top) ** 2)
        if run_p == 0.0:
            raise RuntimeError("postselection amplitude vanished")
        x = top * (nb / (poly.scale * alpha))
        imag_res = float(np.linalg.norm(plus[: be.source_dim] - top))
        phase_res = phases.residual

    residual = float(np.linalg.norm(L @ x - b) / nb)
    return QsvtRun(
        output=x,
        state=x / np.linalg.norm(x),
        success_probability=run_p,
        mode=mode,
        degree=poly.degree,
        kappa=kappa,
        residual=residual,
        phase_residual=phase_res,
        imag_residual=imag_res,
    )


def _cached_poly(kappa: float, epsilon: float, mode: str, context):
    """Reuse polynomial/phases across solves sharing a context dict."""
    if context is None:
        context = {}
    poly = context.get("poly")
    if poly is None or poly.kappa < kappa or poly.epsilon > epsilon:
        # circuit mode pays per polynomial degree (d sequence steps and a
        # d-dimensional phase fit), so it uses the minimal feasible degree
        builder = minimal_inverse_polynomial if mode == "circuit" else build_inverse_polynomial
        poly = builder(max(1.0, kappa) * 1.0001, epsilon)
        context["poly"] = poly
        context.pop("phases", None)
    phases = context.get("phases")
    if mode == "circuit" and phases is None:
        phases = compute_phase_factors(poly, tol=max(DEFAULT_PHASE_TOL, epsilon * 1e-3))
        context["phases"] = phases
    return poly, phases
