"""chronospec: spectral variational quantum dynamics with an emulated QSVT solver.

The pipeline reduces a time-dependent Pauli-sum Hamiltonian to a small
variational ODE, discretizes it with Chebyshev collocation into linear
systems, and solves those either directly or through a quantum singular
value transformation emulation, with classical integrators as oracles.
"""

from .pauli import (
    LcuHamiltonian,
    PauliString,
    eval_coefficients,
    parse_coefficient,
    pauli_apply_state,
)
from .reduction import (
    ReducedDynamics,
    VariationalBasis,
    build_kmoment_basis,
    compute_reduced_operators,
)
from .spectral import (
    ChebyshevGrid,
    Segmentation,
    segment_adaptive,
    segment_uniform,
)
from .systems import (
    SpectralSolution,
    assemble_global,
    assemble_sequential_step,
    estimate_resources,
    run_pipeline,
    solve_direct,
)
from .qsvt import (
    InversePolynomial,
    PhaseSequence,
    build_block_encoding,
    build_inverse_polynomial,
    compute_phase_factors,
    minimal_feasible_degree,
    minimal_inverse_polynomial,
    qsp_response,
    qsvt_solve,
)
from .oracle import (
    ErrorMetrics,
    ObservableSpec,
    Trajectory,
    error_metrics,
    integrate_reduced_ode,
    projection_probability,
    propagate_full_hilbert,
)
from .problems import Problem, builtin_problem, load_problem
from .reports import Curve, Report, emit_report, problem_digest
from .cli import run_experiment

__version__ = "0.1.0"

__all__ = [
    "LcuHamiltonian",
    "PauliString",
    "eval_coefficients",
    "parse_coefficient",
    "pauli_apply_state",
    "ReducedDynamics",
    "VariationalBasis",
    "build_kmoment_basis",
    "compute_reduced_operators",
    "ChebyshevGrid",
    "Segmentation",
    "segment_adaptive",
    "segment_uniform",
    "SpectralSolution",
    "assemble_global",
    "assemble_sequential_step",
    "estimate_resources",
    "run_pipeline",
    "solve_direct",
    "InversePolynomial",
    "PhaseSequence",
    "build_block_encoding",
    "build_inverse_polynomial",
    "compute_phase_factors",
    "minimal_feasible_degree",
    "minimal_inverse_polynomial",
    "qsp_response",
    "qsvt_solve",
    "ErrorMetrics",
    "ObservableSpec",
    "Trajectory",
    "error_metrics",
    "integrate_reduced_ode",
    "projection_probability",
    "propagate_full_hilbert",
    "Problem",
    "builtin_problem",
    "load_problem",
    "Curve",
    "Report",
    "emit_report",
    "problem_digest",
    "run_experiment",
]
