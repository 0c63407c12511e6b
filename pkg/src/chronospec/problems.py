"""Benchmark problem library and JSON problem ingestion.

A Problem bundles a time-dependent LCU Hamiltonian with the reference
state, moment order K, observable targets, and pipeline defaults. Three
built-ins ship with the tool:

* ``rabi`` -- driven two-level system, H(t) = (Delta/2) Z + Omega cos(wt) X.
* ``landau_zener`` -- linear sweep through an avoided crossing,
  H(t) = v (t - T/2) Z + Delta X over a symmetric window wide enough
  that the transition probability has stabilized.
* ``synthetic13`` -- a 4-qubit, 13-term Hamiltonian whose Pauli strings
  follow a collision-style template; the coefficients are synthetic
  Gaussian pulses peaked near mid-evolution (the magnitudes and time
  scales are fixed constants shipped with the tool, not physical data).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .oracle import ObservableSpec
from .pauli import (CoefficientError, LcuHamiltonian, PauliError, PauliString,
                    parse_coefficient)

BUILTIN_NAMES = ("rabi", "landau_zener", "synthetic13")


class ProblemError(ValueError):
    """Problem file or schema violation; message names the field path."""


@dataclass(frozen=True)
class Problem:
    name: str
    hamiltonian: LcuHamiltonian
    reference: int              # computational basis index of the reference
    K: int
    observable: ObservableSpec  # targets in the full Hilbert space
    defaults: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    @property
    def horizon(self) -> float:
        return self.hamiltonian.horizon

    def initial_full_state(self) -> np.ndarray:
        psi = np.zeros(1 << self.n_qubits, dtype=complex)
        psi[self.reference] = 1.0
        return psi

    def default(self, key, fallback=None):
        return self.defaults.get(key, fallback)


def _term(label: str, coeff_spec: dict):
    return (parse_coefficient(coeff_spec), PauliString.from_label(label))


def _rabi(delta: float = 1.0, omega: float = 0.5, drive_freq: float = 1.0,
          horizon: float = 6.0) -> Problem:
    H = LcuHamiltonian(
        n_qubits=1,
        terms=(
            _term("Z", {"variant": "constant", "value": delta / 2}),
            _term("X", {"variant": "trig", "kind": "cos",
                        "amplitude": omega, "frequency": drive_freq}),
        ),
        horizon=horizon,
    )
    obs = ObservableSpec.basis_states(2, [1], label="P_excited")
    return Problem("rabi", H, reference=0, K=1, observable=obs,
                   defaults={"n": 6, "n_tau": 12, "segmentation": "uniform",
                             "epsilon": 1e-6, "n_samples": 201})


def _landau_zener(sweep_rate: float = 1.0, gap: float = 0.5,
                  horizon: float = 20.0) -> Problem:
    # v (t - T/2) Z: polynomial in t so the sweep passes through zero mid-window
    H = LcuHamiltonian(
        n_qubits=1,
        terms=(
            _term("Z", {"variant": "polynomial",
                        "coeffs": [-sweep_rate * horizon / 2, sweep_rate]}),
            _term("X", {"variant": "constant", "value": gap}),
        ),
        horizon=horizon,
    )
    obs = ObservableSpec.basis_states(2, [1], label="P_transfer")
    return Problem("landau_zener", H, reference=0, K=1, observable=obs,
                   defaults={"n": 8, "segmentation": "uniform",
                             "epsilon": 1e-6, "n_samples": 201})


# 13-string template: identity, single-site blocks on qubits 0 and 2, the
# qubit-0 block dressed with Z_1, and the qubit-2 block dressed with Z_1 Z_3.
_SYNTHETIC13_STRINGS = (
    "IIII",   # I
    "IIIX",   # X_0
    "IIIY",   # Y_0
    "IIIZ",   # Z_0
    "IXII",   # X_2
    "IYII",   # Y_2
    "IZII",   # Z_2
    "IIZX",   # Z_1 X_0
    "IIZY",   # Z_1 Y_0
    "IIZZ",   # Z_1 Z_0
    "ZXZI",   # Z_3 X_2 Z_1
    "ZYZI",   # Z_3 Y_2 Z_1
    "ZZZI",   # Z_3 Z_2 Z_1
)

# Gaussian pulse parameters (amplitude, center, width) for each string,
# peaked near mid-evolution with a slowly varying envelope on the identity.
_SYNTHETIC13_PULSES = (
    (0.20, 5.0, 4.0),
    (0.30, 4.2, 1.2),
    (0.22, 5.6, 1.4),
    (0.35, 5.0, 1.8),
    (0.28, 4.6, 1.3),
    (0.18, 5.4, 1.1),
    (0.32, 5.0, 1.6),
    (0.15, 4.8, 1.0),
    (0.12, 5.2, 1.2),
    (0.25, 5.0, 1.5),
    (0.10, 4.5, 1.1),
    (0.08, 5.5, 1.3),
    (0.16, 5.0, 1.4),
)


def _synthetic13(horizon: float = 10.0) -> Problem:
    terms = tuple(
        _term(label, {"variant": "gaussian", "amplitude": a, "center": c, "width": w})
        for label, (a, c, w) in zip(_SYNTHETIC13_STRINGS, _SYNTHETIC13_PULSES)
    )
    H = LcuHamiltonian(n_qubits=4, terms=terms, horizon=horizon)
    # population transferred out of the reference configuration on qubit 0
    obs = ObservableSpec.basis_states(16, [1], label="P_transfer")
    return Problem("synthetic13", H, reference=0, K=2, observable=obs,
                   defaults={"n": 6, "segmentation": "adaptive",
                             "epsilon": 1e-6, "n_samples": 201})


_BUILTINS = {"rabi": _rabi, "landau_zener": _landau_zener,
             "synthetic13": _synthetic13}


def builtin_problem(name: str, **overrides) -> Problem:
    if name not in _BUILTINS:
        raise ProblemError(f"unknown built-in problem {name!r}; "
                           f"choose from {', '.join(BUILTIN_NAMES)}")
    return _BUILTINS[name](**overrides)


def _require(obj: dict, key: str, path: str, types=None):
    if key not in obj:
        raise ProblemError(f"{path}.{key}: missing required field")
    val = obj[key]
    if types is not None and not isinstance(val, types):
        raise ProblemError(
            f"{path}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(val).__name__}")
    return val


def problem_from_dict(data: dict, path: str = "problem") -> Problem:
    """Validate and construct a Problem from a parsed JSON document."""
    if not isinstance(data, dict):
        raise ProblemError(f"{path}: expected a JSON object")
    name = _require(data, "name", path, str)
    n_qubits = _require(data, "n_qubits", path, int)
    horizon = _require(data, "horizon", path, (int, float))
    raw_terms = _require(data, "terms", path, list)
    if not raw_terms:
        raise ProblemError(f"{path}.terms: must be non-empty")
    terms = []
    for i, t in enumerate(raw_terms):
        tpath = f"{path}.terms[{i}]"
        if not isinstance(t, dict):
            raise ProblemError(f"{tpath}: expected an object")
        label = _require(t, "string", tpath, str)
        spec = _require(t, "coefficient", tpath, dict)
        try:
            p = PauliString.from_label(label)
        except PauliError as exc:
            raise ProblemError(f"{tpath}.string: {exc}") from exc
        if p.n_qubits != n_qubits:
            raise ProblemError(
                f"{tpath}.string: length {p.n_qubits} != n_qubits {n_qubits}")
        try:
            g = parse_coefficient(spec)
        except (CoefficientError, KeyError) as exc:
            raise ProblemError(f"{tpath}.coefficient: {exc}") from exc
        terms.append((g, p))
    try:
        H = LcuHamiltonian(n_qubits, tuple(terms), float(horizon))
    except PauliError as exc:
        raise ProblemError(f"{path}: {exc}") from exc

    reference = data.get("reference", 0)
    if not isinstance(reference, int) or not 0 <= reference < (1 << n_qubits):
        raise ProblemError(f"{path}.reference: must be a basis index in "
                           f"[0, {1 << n_qubits})")
    K = data.get("K", 1)
    if not isinstance(K, int) or K < 0:
        raise ProblemError(f"{path}.K: must be a non-negative integer")

    obs_spec = data.get("observable", {"indices": [reference ^ 1]})
    opath = f"{path}.observable"
    indices = _require(obs_spec, "indices", opath, list)
    if not indices or not all(
            isinstance(i, int) and 0 <= i < (1 << n_qubits) for i in indices):
        raise ProblemError(f"{opath}.indices: must be basis indices in "
                           f"[0, {1 << n_qubits})")
    if len(set(indices)) != len(indices):
        raise ProblemError(f"{opath}.indices: duplicate target")
    obs = ObservableSpec.basis_states(1 << n_qubits, indices,
                                      label=obs_spec.get("label", "P"))

    defaults = data.get("defaults", {})
    if not isinstance(defaults, dict):
        raise ProblemError(f"{path}.defaults: expected an object")
    return Problem(name, H, reference, K, obs, dict(defaults))


def load_problem(source) -> Problem:
    """Resolve a built-in name or load and validate a problem JSON file."""
    source = str(source)
    if source in _BUILTINS:
        return builtin_problem(source)
    try:
        with open(source) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ProblemError(f"no built-in or file named {source!r}") from None
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{source}: malformed JSON at line {exc.lineno}, "
                           f"column {exc.colno}: {exc.msg}") from exc
    return problem_from_dict(data, path=source)
