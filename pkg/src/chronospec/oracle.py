"""Classical reference dynamics and error metrics.

Adaptive Runge-Kutta integration of the reduced coefficient ODE
da/dt = A(t) a and of the full Schrodinger equation i d/dt psi = H(t) psi,
plus the projection observables and error metrics used to judge the
spectral pipeline against ground truth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .pauli import LcuHamiltonian, QubitCapExceeded, eval_coefficients

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14
FULL_HILBERT_QUBIT_CAP = 12


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of an initial-value problem on [0, T]."""

    times: np.ndarray      # (n_samples,), strictly increasing, times[0]=0
    states: np.ndarray     # (n_samples, dim) complex
    rtol: float
    atol: float
    n_steps: int = 0       # accepted integrator steps (0 for analytic fills)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise OracleError("sample times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        """t, Re/Im of each component, norm -- one row per sample."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            header = ["t"]
            for i in range(self.dim):
                header += [f"re_{i}", f"im_{i}"]
            header.append("norm")
            w.writerow(header)
            for t, s, nrm in zip(self.times, self.states, self.norms()):
                row = [repr(float(t))]
                for c in s:
                    row += [repr(float(c.real)), repr(float(c.imag))]
                row.append(repr(float(nrm)))
                w.writerow(row)


@dataclass(frozen=True)
class ObservableSpec:
    """Projection target set: probability = sum of |<target|psi>|^2."""

    targets: np.ndarray    # (n_targets, dim), rows orthonormal
    label: str = "P"

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.targets, dtype=complex))
        object.__setattr__(self, "targets", t)
        gram = t @ t.conj().T
        if not np.allclose(gram, np.eye(t.shape[0]), atol=1e-10):
            raise OracleError("observable targets must be orthonormal")

    @classmethod
    def basis_states(cls, dim: int, indices, label: str = "P") -> "ObservableSpec":
        rows = np.zeros((len(indices), dim), dtype=complex)
        for r, i in enumerate(indices):
            rows[r, i] = 1.0
        return cls(rows, label)


def _sample_grid(T: float, n_samples: int) -> np.ndarray:
    if T <= 0:
        raise OracleError("horizon must be positive")
    return np.linspace(0.0, T, max(2, int(n_samples)))


def _integrate(rhs, y0: np.ndarray, T: float, rtol: float, atol: float,
               n_samples: int) -> Trajectory:
    if rtol <= 0 or atol <= 0:
        raise OracleError("tolerances must be positive")
    times = _sample_grid(T, n_samples)
    sol = scipy.integrate.solve_ivp(
        rhs, (0.0, T), np.asarray(y0, dtype=complex),
        method="RK45", t_eval=times, rtol=rtol, atol=atol, dense_output=False,
    )
    if not sol.success:
        raise OracleError(f"integrator failed: {sol.message}")
    return Trajectory(times=sol.t, states=sol.y.T.copy(), rtol=rtol, atol=atol,
                      n_steps=int(sol.nfev))


def integrate_reduced_ode(a_fn, alpha0, T: float, rtol: float = DEFAULT_RTOL,
                          atol: float = DEFAULT_ATOL, n_samples: int = 201) -> Trajectory:
    """Integrate da/dt = A(t) a with an embedded RK 5(4) pair.

    a_fn maps a time in [0, T] to the coefficient matrix; alpha0 is the
    initial coefficient vector.
    """
    alpha0 = np.asarray(alpha0, dtype=complex)

    def rhs(t, y):
        return a_fn(t) @ y

    return _integrate(rhs, alpha0, T, rtol, atol, n_samples)


def _term_actions(H: LcuHamiltonian):
    """Precompute (source indices, phase vector) for each Pauli string."""
    dim = 1 << H.n_qubits
    idx = np.arange(dim)
    actions = []
    for _, p in H.terms:
        src = idx ^ p.x_mask
        zpar = np.array([(p.z_mask & int(s)).bit_count() & 1 for s in src])
        ph = (1j ** ((p.phase_exp + (p.x_mask & p.z_mask).bit_count()) % 4)) \
            * np.where(zpar, -1.0 + 0j, 1.0 + 0j)
        actions.append((src, ph))
    return actions


def propagate_full_hilbert(H: LcuHamiltonian, psi0, T: float | None = None,
                           rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                           n_samples: int = 201) -> Trajectory:
    """Integrate i d/dt psi = H(t) psi on the full 2^N_Q space.

    The Hamiltonian action is matrix-free: each Pauli string is a signed
    permutation applied with precomputed index/phase tables.
    """
    if H.n_qubits > FULL_HILBERT_QUBIT_CAP:
        raise QubitCapExceeded(
            f"{H.n_qubits} qubits exceeds the full-propagation cap "
            f"({FULL_HILBERT_QUBIT_CAP})")
    if T is None:
        T = H.horizon
    psi0 = np.asarray(psi0, dtype=complex)
    actions = _term_actions(H)

    def rhs(t, y):
        g = eval_coefficients(H, t)
        out = np.zeros_like(y)
        for gv, (src, ph) in zip(g, actions):
            out += gv * (ph * y[src])
        return -1j * out

    return _integrate(rhs, psi0, T, rtol, atol, n_samples)


def projection_probability(psi, obs: ObservableSpec) -> float:
    """Sum over observable targets of the squared overlap with psi."""
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-6:
        raise OracleError(f"state norm {nrm} deviates from 1 beyond 1e-6")
    amps = obs.targets @ psi.conj()
    return float(np.sum(np.abs(amps) ** 2))


@dataclass(frozen=True)
class ErrorMetrics:
    fidelity: np.ndarray          # per-sample |<ref|sol>|^2 / (norms)
    delta_p: float                # relative endpoint probability error
    delta_p_absolute: bool        # True when P_exact(T)=0 forced absolute
    max_norm_drift: float         # max_t | ||sol(t)|| - 1 |
    times: np.ndarray = field(repr=False, default=None)

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelity))


def _states_at(sol, times: np.ndarray) -> np.ndarray:
    """Sample either a SpectralSolution or a Trajectory at given times."""
    if isinstance(sol, Trajectory):
        if sol.times.shape == times.shape and np.allclose(sol.times, times):
            return sol.states
        # piecewise-cubic resample keeps the oracle the bottleneck-free path
        out = np.empty((times.size, sol.dim), dtype=complex)
        for j in range(sol.dim):
            out[:, j] = (np.interp(times, sol.times, sol.states[:, j].real)
                         + 1j * np.interp(times, sol.times, sol.states[:, j].imag))
        return out
    return sol.sample(times)


def error_metrics(sol, ref: Trajectory, obs: ObservableSpec | None = None) -> ErrorMetrics:
    """Fidelity curve, endpoint probability error, and norm drift of sol vs ref."""
    times = ref.times
    states = _states_at(sol, times)
    if states.shape != ref.states.shape:
        raise OracleError("solution/reference dimension mismatch")
    sol_norms = np.linalg.norm(states, axis=1)
    ref_norms = np.linalg.norm(ref.states, axis=1)
    if np.any(sol_norms == 0) or np.any(ref_norms == 0):
        raise OracleError("zero-norm state encountered")
    overlaps = np.abs(np.sum(ref.states.conj() * states, axis=1))
    fidelity = (overlaps / (sol_norms * ref_norms)) ** 2
    drift = float(np.max(np.abs(sol_norms - 1.0)))

    delta_p = 0.0
    absolute = False
    if obs is not None:
        p_sol = projection_probability(states[-1] / sol_norms[-1], obs)
        p_ref = projection_probability(ref.states[-1] / ref_norms[-1], obs)
        if p_ref == 0.0:
            delta_p, absolute = abs(p_sol - p_ref), True
        else:
            delta_p = abs(p_sol - p_ref) / p_ref
    return ErrorMetrics(fidelity=fidelity, delta_p=delta_p,
                        delta_p_absolute=absolute, max_norm_drift=drift,
                        times=times)
