"""Problem loading, report emission, and the command-line drivers."""

import json

import numpy as np
import pytest

from chronospec.cli import build_parser, main, run_experiment
from chronospec.problems import ProblemError, builtin_problem, load_problem
from chronospec.reports import problem_digest


def test_builtin_problems_load():
    for name in ("rabi", "landau_zener", "synthetic13"):
        p = builtin_problem(name)
        assert p.horizon > 0
        assert p.observable.targets.shape[1] == 2**p.n_qubits


def test_unknown_builtin_rejected():
    with pytest.raises(ProblemError):
        builtin_problem("ising_chain")


def test_problem_digest_is_stable_and_sensitive():
    a = builtin_problem("rabi")
    b = builtin_problem("rabi")
    c = builtin_problem("rabi", horizon=7.0)
    assert problem_digest(a) == problem_digest(b)
    assert problem_digest(a) != problem_digest(c)


def test_problem_json_round_trip(tmp_path):
    spec = {
        "name": "toy",
        "n_qubits": 1,
        "horizon": 2.0,
        "reference": 0,
        "K": 1,
        "terms": [
            {"string": "Z", "coefficient": {"variant": "constant", "value": 0.5}},
            {"string": "X", "coefficient": {"variant": "trig", "kind": "cos",
                                           "amplitude": 0.3, "frequency": 1.0}},
        ],
        "observable": {"indices": [1], "label": "P1"},
    }
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(spec))
    p = load_problem(str(path))
    assert p.name == "toy"
    assert p.hamiltonian.n_terms == 2
    assert p.observable.label == "P1"


def test_malformed_json_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"name": "x",\n  "oops"\n}')
    with pytest.raises(ProblemError) as err:
        load_problem(str(path))
    assert "line" in str(err.value)


def test_simulate_experiment_report():
    p = builtin_problem("rabi")
    report = run_experiment(p, "simulate", {"n": 6})
    assert report.metrics["delta_p"] < 1e-6
    assert report.metrics["min_fidelity"] > 1.0 - 1e-8
    assert "probability" in report.curves


def test_resources_experiment_default_rows():
    p = builtin_problem("rabi")
    report = run_experiment(p, "resources", {})
    rows = {(r["n_tau"], r["mode"]): r for r in report.resources}
    assert rows[(128, "global")]["dimension"] == 2560
    assert rows[(61, "sequential")]["invocations"] == 61


def test_unknown_experiment_rejected():
    with pytest.raises(ValueError):
        run_experiment(builtin_problem("rabi"), "extrapolate", {})


def test_cli_simulate_writes_outputs(tmp_path, capsys):
    rc = main(["simulate", "--problem", "rabi", "-n", "5",
               "--out", str(tmp_path), "--format", "csv,json,svg"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "delta_p" in out
    written = list(tmp_path.iterdir())
    suffixes = {p.suffix for p in written}
    assert {".csv", ".json", ".svg"} <= suffixes
    payload = json.loads((tmp_path / "rabi_simulate.json").read_text())
    assert payload["metadata"]["problem"] == "rabi"


def test_cli_qsp_phases(tmp_path, capsys):
    rc = main(["qsp-phases", "--kappa", "2.0", "--epsilon", "1e-3",
               "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads(next(tmp_path.glob("*qsp_phases.json")).read_text())
    m = payload["metrics"]
    assert m["held_out_error"] < 1e-8
    assert len(m["phases"]) == m["degree"]


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    rc = main(["simulate", "--problem", "no_such_problem",
               "--out", str(tmp_path)])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_cli_converge_n_range(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CHRONOSPEC_THREADS", "2")
    rc = main(["converge", "--problem", "rabi", "--n-range", "3:5",
               "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "rabi_converge.json").read_text())
    dps = payload["metrics"]["delta_p"]
    assert sorted(map(int, dps)) == [3, 4, 5]
    assert dps["5"] < dps["3"]
