"""Experiment drivers and the command-line interface.

One subcommand per experiment family:

* ``simulate``   -- one pipeline run, metrics against the RK oracle
* ``converge``   -- sweep the collocation degree n, tabulate dP(n)
* ``compare``    -- global vs sequential on identical segmentation
* ``resources``  -- resource-estimate table over (N_tau, N_alpha, n) rows
* ``qsp-phases`` -- synthesize and verify phase factors for (kappa, eps)

The worker pool for independent experiment cells is capped by the
CHRONOSPEC_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import qsvt
from .oracle import Trajectory, error_metrics, integrate_reduced_ode
from .problems import Problem, ProblemError, load_problem
from .reduction import build_kmoment_basis, compute_reduced_operators
from .reports import Curve, Report, ReportError, emit_report, problem_digest
from .systems import estimate_resources, run_pipeline

EXPERIMENTS = ("simulate", "converge", "compare", "resources", "qsp_phases")


def _pool_size() -> int:
    env = os.environ.get("CHRONOSPEC_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"CHRONOSPEC_THREADS must be an integer, got {env!r}")
        return max(1, n)
    return min(4, os.cpu_count() or 1)


def _reduced_setup(problem: Problem):
    basis = build_kmoment_basis(problem.hamiltonian, problem.reference, problem.K)
    rd = compute_reduced_operators(basis, problem.hamiltonian)
    alpha0 = np.zeros(basis.size, dtype=complex)
    alpha0[0] = 1.0
    return basis, rd, alpha0


def _full_trajectory(times, alphas, basis) -> Trajectory:
    """Lift reduced coefficients to full-Hilbert statevectors."""
    states = np.asarray(alphas, dtype=complex) @ basis.states
    return Trajectory(times=np.asarray(times, float), states=states,
                      rtol=0.0, atol=0.0)


def _probability_curve(traj: Trajectory, obs) -> np.ndarray:
    amps = traj.states @ obs.targets.conj().T
    return np.sum(np.abs(amps) ** 2, axis=1)


def _pipeline_options(problem: Problem, opts: dict) -> dict:
    return {
        "mode": opts.get("mode", "global"),
        "solver": opts.get("solver", "direct"),
        "n": opts.get("n") or problem.default("n", 4),
        "segmentation": opts.get("segmentation")
                        or problem.default("segmentation", "uniform"),
        "n_tau": opts.get("n_tau", problem.default("n_tau")),
        "epsilon": opts.get("epsilon") or problem.default("epsilon", 1e-6),
    }


def _simulate(problem: Problem, opts: dict) -> Report:
    basis, rd, alpha0 = _reduced_setup(problem)
    popts = _pipeline_options(problem, opts)
    sol, diag = run_pipeline(rd, alpha0, problem.horizon, **popts)
    n_samples = opts.get("n_samples") or problem.default("n_samples", 201)
    ref = integrate_reduced_ode(rd.a_matrix, alpha0, problem.horizon,
                                n_samples=n_samples)
    sol_full = _full_trajectory(ref.times, sol.sample(ref.times), basis)
    ref_full = _full_trajectory(ref.times, ref.states, basis)
    metrics = error_metrics(sol_full, ref_full, problem.observable)
    p_curve = _probability_curve(sol_full, problem.observable)
    solve = diag["solves"][0]
    report = Report(
        name=f"{problem.name}_simulate",
        metadata={
            "problem": problem.name,
            "problem_hash": problem_digest(problem),
            **{k: popts[k] for k in ("mode", "solver", "n", "segmentation",
                                     "epsilon")},
            "n_tau": diag["n_tau"],
            "kappa": solve.get("kappa"),
            "degree": solve.get("degree"),
            "success_probability": solve.get("success_probability"),
        },
        metrics={
            "delta_p": metrics.delta_p,
            "delta_p_absolute": metrics.delta_p_absolute,
            "min_fidelity": metrics.min_fidelity,
            "max_norm_drift": metrics.max_norm_drift,
        },
        trajectories={"spectral": sol_full, "oracle": ref_full},
        curves={
            "probability": Curve(ref.times, p_curve, "t",
                                 problem.observable.label),
            "fidelity": Curve(ref.times, metrics.fidelity, "t", "fidelity"),
        },
    )
    return report


def _converge_cell(args):
    problem, rd, basis, alpha0, ref_full, n, popts = args
    sol, _ = run_pipeline(rd, alpha0, problem.horizon, **{**popts, "n": n})
    sol_full = _full_trajectory(ref_full.times, sol.sample(ref_full.times), basis)
    metrics = error_metrics(sol_full, ref_full, problem.observable)
    return n, metrics.delta_p, metrics.min_fidelity


def _converge(problem: Problem, opts: dict) -> Report:
    basis, rd, alpha0 = _reduced_setup(problem)
    popts = _pipeline_options(problem, opts)
    n_values = opts.get("n_values") or list(range(1, 9))
    n_samples = opts.get("n_samples") or problem.default("n_samples", 201)
    ref = integrate_reduced_ode(rd.a_matrix, alpha0, problem.horizon,
                                n_samples=n_samples)
    ref_full = _full_trajectory(ref.times, ref.states, basis)
    cells = [(problem, rd, basis, alpha0, ref_full, n, popts) for n in n_values]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_pool_size()) as ex:
        rows = sorted(ex.map(_converge_cell, cells))
    ns = np.array([r[0] for r in rows], dtype=float)
    dps = np.array([r[1] for r in rows])
    fids = np.array([r[2] for r in rows])
    return Report(
        name=f"{problem.name}_converge",
        metadata={
            "problem": problem.name,
            "problem_hash": problem_digest(problem),
            **{k: popts[k] for k in ("mode", "solver", "segmentation", "epsilon")},
            "n_values": [int(n) for n in ns],
        },
        metrics={
            "delta_p": {int(n): float(d) for n, d in zip(ns, dps)},
            "min_fidelity": {int(n): float(f) for n, f in zip(ns, fids)},
        },
        curves={"delta_p": Curve(ns, np.maximum(dps, 1e-300), "n",
                                 "relative probability error", log_y=True)},
    )


def _compare(problem: Problem, opts: dict) -> Report:
    basis, rd, alpha0 = _reduced_setup(problem)
    popts = _pipeline_options(problem, opts)
    sol_g, diag_g = run_pipeline(rd, alpha0, problem.horizon,
                                 **{**popts, "mode": "global"})
    n_tau = diag_g["n_tau"] if popts["segmentation"] == "uniform" else popts["n_tau"]
    sol_s, _ = run_pipeline(rd, alpha0, problem.horizon,
                            **{**popts, "mode": "sequential", "n_tau": n_tau})
    disc = float(np.max(np.abs(sol_g.endpoints - sol_s.endpoints)))
    renorm_err = float(np.max(np.abs(
        np.linalg.norm(sol_s.renormalized_endpoints, axis=1) - 1.0)))
    times = np.linspace(0.0, problem.horizon,
                        opts.get("n_samples") or 201)
    drift_g = sol_g.norm_drift(times)
    boundaries = np.asarray(sol_g.segmentation.boundaries[1:], float)
    per_interval = np.max(np.abs(sol_g.endpoints - sol_s.endpoints), axis=1)
    return Report(
        name=f"{problem.name}_compare",
        metadata={
            "problem": problem.name,
            "problem_hash": problem_digest(problem),
            "solver": popts["solver"],
            "n": popts["n"],
            "n_tau": int(n_tau),
            "segmentation": popts["segmentation"],
        },
        metrics={
            "max_endpoint_discrepancy": disc,
            "sequential_renorm_deviation": renorm_err,
            "global_norm_drift": drift_g,
        },
        curves={"endpoint_discrepancy": Curve(
            boundaries, np.maximum(per_interval, 1e-300),
            "t", "endpoint discrepancy", log_y=True)},
    )


def _resources(problem: Problem, opts: dict) -> Report:
    combos = opts.get("combos") or [(128, 4, 4, "global"), (61, 4, 4, "sequential")]
    rows = []
    for n_tau, n_alpha, n, mode in combos:
        est = estimate_resources(n_tau, n_alpha, n, mode)
        rows.append({
            "mode": mode, "n_tau": n_tau, "n_alpha": n_alpha, "n": n,
            "dimension": est.dimension, "qubits": est.qubit_count,
            "invocations": est.qlsa_invocations,
        })
    return Report(
        name=f"{problem.name}_resources" if problem else "resources",
        metadata={"problem": problem.name if problem else None},
        metrics={},
        resources=rows,
    )


def _qsp_phases(problem, opts: dict) -> Report:
    kappa = opts.get("kappa") or 4.0
    epsilon = opts.get("epsilon") or 1e-4
    poly = qsvt.minimal_inverse_polynomial(kappa, epsilon)
    phases = qsvt.compute_phase_factors(poly)
    held = np.linspace(-1.0, 1.0, 1000)
    err = float(np.max(np.abs(qsvt.qsp_response(phases, held).real - poly(held))))
    name = problem.name if problem else "inverse"
    return Report(
        name=f"{name}_qsp_phases",
        metadata={"kappa": float(kappa), "epsilon": float(epsilon)},
        metrics={
            "degree": poly.degree,
            "scale": poly.scale,
            "max_abs": poly.max_abs,
            "window_error": poly.error_bound,
            "fit_residual": phases.residual,
            "held_out_error": err,
            "phases": phases.to_json_list(),
        },
        curves={"target": Curve(held, poly(held), "x", "P(x)")},
    )


_DRIVERS = {
    "simulate": _simulate,
    "converge": _converge,
    "compare": _compare,
    "resources": _resources,
    "qsp_phases": _qsp_phases,
}


def run_experiment(problem, experiment: str, options: dict = None) -> Report:
    """Run one experiment and return its Report (no files written)."""
    if experiment not in _DRIVERS:
        raise ValueError(f"unknown experiment {experiment!r}; "
                         f"choose from {', '.join(EXPERIMENTS)}")
    return _DRIVERS[experiment](problem, dict(options or {}))


# --- argument parsing -------------------------------------------------------

def _parse_n_range(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _parse_combos(text: str) -> list[tuple]:
    combos = []
    for part in text.split(";"):
        n_tau, n_alpha, n, mode = part.split(",")
        combos.append((int(n_tau), int(n_alpha), int(n), mode.strip()))
    return combos


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronospec",
        description="Spectral variational dynamics with an emulated QSVT solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem_required=True):
        p.add_argument("--problem", default="rabi" if not problem_required else None,
                       required=problem_required,
                       help="built-in name (rabi, landau_zener, synthetic13) or JSON path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", default="csv,json",
                       help="comma-separated subset of csv,json,svg")

    p = sub.add_parser("simulate", help="one pipeline run with oracle metrics")
    common(p)
    p.add_argument("--mode", choices=("global", "sequential"), default="global")
    p.add_argument("--solver", choices=("direct", "qsvt_ideal", "qsvt_circuit"),
                   default="direct")
    p.add_argument("-n", "--degree", type=int, default=None,
                   help="Chebyshev collocation degree")
    p.add_argument("--ntau", type=int, default=None, help="number of intervals")
    p.add_argument("--segmentation", choices=("uniform", "adaptive"), default=None)
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("converge", help="degree sweep of the probability error")
    common(p)
    p.add_argument("--n-range", default="1:8",
                   help="lo:hi (inclusive) or comma list of degrees")
    p.add_argument("--mode", choices=("global", "sequential"), default="global")
    p.add_argument("--solver", choices=("direct", "qsvt_ideal", "qsvt_circuit"),
                   default="direct")
    p.add_argument("--ntau", type=int, default=None)
    p.add_argument("--segmentation", choices=("uniform", "adaptive"), default=None)
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("compare", help="global vs sequential consistency")
    common(p)
    p.add_argument("-n", "--degree", type=int, default=4)
    p.add_argument("--solver", choices=("direct", "qsvt_ideal", "qsvt_circuit"),
                   default="direct")
    p.add_argument("--ntau", type=int, default=None)
    p.add_argument("--segmentation", choices=("uniform", "adaptive"), default=None)

    p = sub.add_parser("resources", help="resource-estimate table")
    common(p, problem_required=False)
    p.add_argument("--combos", default=None,
                   help='semicolon-separated "n_tau,n_alpha,n,mode" rows')

    p = sub.add_parser("qsp-phases", help="synthesize and verify phase factors")
    common(p, problem_required=False)
    p.add_argument("--kappa", type=float, default=4.0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command.replace("-", "_")
    try:
        problem = load_problem(args.problem) if args.problem else None
        options = {}
        for key, attr in (("n", "degree"), ("n_tau", "ntau"),
                          ("mode", "mode"), ("solver", "solver"),
                          ("segmentation", "segmentation"),
                          ("epsilon", "epsilon"), ("kappa", "kappa")):
            if getattr(args, attr, None) is not None:
                options[key] = getattr(args, attr)
        if command == "converge":
            options["n_values"] = _parse_n_range(args.n_range)
        if command == "resources" and args.combos:
            options["combos"] = _parse_combos(args.combos)
        report = run_experiment(problem, command, options)
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        written = emit_report(report, args.out, formats)
    except (ProblemError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for key, val in sorted(report.metrics.items()):
        if isinstance(val, float):
            print(f"{key}: {val:.6g}")
        elif not isinstance(val, (dict, list)):
            print(f"{key}: {val}")
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
