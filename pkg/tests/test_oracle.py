"""Classical reference integrators and error metrics."""

import numpy as np
import pytest

from chronospec.oracle import (
    ObservableSpec,
    OracleError,
    Trajectory,
    error_metrics,
    integrate_reduced_ode,
    projection_probability,
    propagate_full_hilbert,
)
from chronospec.pauli import QubitCapExceeded
from chronospec.problems import builtin_problem


def test_reduced_ode_rotation():
    w = 0.9
    a_fn = lambda t: np.array([[0.0, -w], [w, 0.0]], dtype=complex)
    traj = integrate_reduced_ode(a_fn, np.array([1.0, 0.0], dtype=complex), 3.0)
    expected = np.array([np.cos(w * 3.0), np.sin(w * 3.0)])
    assert np.allclose(traj.endpoint(), expected, atol=1e-9)
    assert np.allclose(traj.norms(), 1.0, atol=1e-9)


def test_full_hilbert_constant_hamiltonian():
    """Constant H: compare against the exact matrix exponential."""
    from scipy.linalg import expm
    from chronospec.pauli import dense_hamiltonian
    p = builtin_problem("landau_zener", horizon=2.0)
    H = p.hamiltonian
    psi0 = p.initial_full_state()
    traj = propagate_full_hilbert(H, psi0, T=2.0, n_samples=5)
    # piecewise comparison via high-order quadrature of the time-ordered flow
    from scipy.integrate import solve_ivp
    def rhs(t, y):
        return -1j * dense_hamiltonian(H, t) @ y
    ref = solve_ivp(rhs, (0.0, 2.0), psi0, rtol=1e-12, atol=1e-14,
                    t_eval=traj.times)
    assert np.allclose(traj.states, ref.y.T, atol=1e-8)


def test_full_hilbert_qubit_cap():
    from chronospec.pauli import LcuHamiltonian, PauliString, parse_coefficient
    n = 13
    H = LcuHamiltonian(
        n_qubits=n,
        terms=((parse_coefficient({"variant": "constant", "value": 1.0}),
                PauliString.from_label("Z" * n)),),
        horizon=1.0,
    )
    psi0 = np.zeros(2**n, dtype=complex)
    psi0[0] = 1.0
    with pytest.raises(QubitCapExceeded):
        propagate_full_hilbert(H, psi0, T=1.0)


def test_projection_probability():
    obs = ObservableSpec.basis_states(4, [1, 2])
    psi = np.array([0.5, 0.5, 0.5, 0.5], dtype=complex)
    assert np.isclose(projection_probability(psi, obs), 0.5)
    bad = 2.0 * psi
    with pytest.raises(OracleError):
        projection_probability(bad, obs)


def test_observable_requires_orthonormal_targets():
    with pytest.raises(OracleError):
        ObservableSpec(targets=np.array([[1.0, 1.0]], dtype=complex))


def test_error_metrics_identical_trajectories():
    times = np.linspace(0.0, 1.0, 11)
    states = np.exp(1j * times)[:, None] * np.array([[1.0, 0.0]])
    traj = Trajectory(times=times, states=states, rtol=0, atol=0)
    obs = ObservableSpec.basis_states(2, [0])
    m = error_metrics(traj, traj, obs)
    assert m.delta_p == 0.0
    assert m.min_fidelity >= 1.0 - 1e-14
    assert m.max_norm_drift < 1e-14


def test_error_metrics_global_phase_invariance():
    times = np.linspace(0.0, 1.0, 11)
    states = np.exp(1j * times)[:, None] * np.array([[0.6, 0.8]])
    a = Trajectory(times=times, states=states, rtol=0, atol=0)
    b = Trajectory(times=times, states=states * np.exp(0.7j), rtol=0, atol=0)
    m = error_metrics(a, b)
    assert m.min_fidelity >= 1.0 - 1e-14


def test_trajectory_csv_round_trip(tmp_path):
    times = np.linspace(0.0, 1.0, 5)
    states = np.exp(1j * times)[:, None] * np.array([[1.0, 0.0]])
    traj = Trajectory(times=times, states=states, rtol=0, atol=0)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (5, 1 + 4 + 1)  # t, re/im per component, norm
    assert np.allclose(data[:, 0], times)
