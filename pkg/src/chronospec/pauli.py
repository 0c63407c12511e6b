"""Pauli strings and time-dependent LCU Hamiltonians.

Conventions (fixed once, used everywhere):

* Qubit 0 is the least significant bit of a computational basis index.
  In text labels ("XZIY") the leftmost character acts on the highest
  qubit index.
* A ``PauliString`` represents ``i**phase_exp * (s_{N-1} x ... x s_0)``
  where each site factor ``s_p`` is the literal Pauli letter determined
  by the mask bits (x=1,z=0 -> X; x=0,z=1 -> Z; x=1,z=1 -> Y).
* Internally the algebra is carried out in the symplectic X^x Z^z form;
  phases are tracked as exact powers of i.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "CoefficientFn",
    "LcuHamiltonian",
    "parse_coefficient",
    "eval_coefficients",
    "pauli_product",
    "pauli_apply_basis",
    "pauli_apply_state",
    "dense_pauli",
    "dense_hamiltonian",
    "PauliError",
    "CoefficientError",
    "QubitCapExceeded",
]

DEFAULT_QUBIT_CAP = 12

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_SITE_MATS = {"I": _I2, "X": _SX, "Y": _SY, "Z": _SZ}


class PauliError(ValueError):
    """Invalid Pauli string construction or combination."""


class CoefficientError(ValueError):
    """Invalid coefficient descriptor or evaluation outside the domain."""


class QubitCapExceeded(ValueError):
    """Dense realization requested beyond the configured qubit cap."""


@dataclass(frozen=True)
class PauliString:
    """An N-qubit Pauli string with an exact i-power global phase."""

    n_qubits: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise PauliError("PauliString needs at least one qubit")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise PauliError("mask exceeds qubit count")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0, 0)

    @classmethod
    def from_label(cls, label: str, phase_exp: int = 0) -> "PauliString":
        """Build from text like "XZIY"; leftmost char = highest qubit."""
        if not label:
            raise PauliError("empty Pauli label")
        x = z = 0
        n = len(label)
        for pos, ch in enumerate(label):
            qubit = n - 1 - pos
            if ch == "I":
                pass
            elif ch == "X":
                x |= 1 << qubit
            elif ch == "Y":
                x |= 1 << qubit
                z |= 1 << qubit
            elif ch == "Z":
                z |= 1 << qubit
            else:
                raise PauliError(f"unknown Pauli character {ch!r} at position {pos}")
        return cls(n, x, z, phase_exp)

    @property
    def label(self) -> str:
        chars = []
        for qubit in reversed(range(self.n_qubits)):
            xb = (self.x_mask >> qubit) & 1
            zb = (self.z_mask >> qubit) & 1
            chars.append("IXZY"[xb + 2 * zb] if (xb, zb) != (1, 1) else "Y")
        return "".join(chars)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def phase(self) -> complex:
        return 1j ** self.phase_exp

    def key(self) -> tuple[int, int]:
        """Phase-free identity of the string (for merging duplicates)."""
        return (self.x_mask, self.z_mask)

    def __str__(self) -> str:
        pre = ["", "i*", "-", "-i*"][self.phase_exp]
        return pre + self.label


def _xz_phase_exp(p: PauliString) -> int:
    # power of i when rewriting the string as i^e * X^x Z^z
    # (each Y site contributes one factor of i: Y = i X Z).
    return (p.phase_exp + ((p.x_mask & p.z_mask).bit_count())) % 4


def pauli_product(a: PauliString, b: PauliString) -> PauliString:
    """Exact product a*b with accumulated i-power phase."""
    if a.n_qubits != b.n_qubits:
        raise PauliError("length mismatch in Pauli product")
    ea, eb = _xz_phase_exp(a), _xz_phase_exp(b)
    # Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
    swap = (a.z_mask & b.x_mask).bit_count()
    x = a.x_mask ^ b.x_mask
    z = a.z_mask ^ b.z_mask
    e_xz = (ea + eb + 2 * swap) % 4
    # convert i^e_xz X^x Z^z back to letter form: subtract the Y factors
    phase_exp = (e_xz - (x & z).bit_count()) % 4
    return PauliString(a.n_qubits, x, z, phase_exp)


def pauli_apply_basis(p: PauliString, b: int) -> tuple[int, complex]:
    """Apply the string to basis state |b>, returning (index, phase).

    P|b> = i^{phase_exp} * i^{|x&z|} * (-1)^{|z & b|} |b ^ x>.
    """
    if not 0 <= b < (1 << p.n_qubits):
        raise PauliError(f"basis index {b} out of range for {p.n_qubits} qubits")
    e = (p.phase_exp + (p.x_mask & p.z_mask).bit_count() + 2 * (p.z_mask & b).bit_count()) % 4
    return b ^ p.x_mask, 1j ** e


def pauli_apply_state(p: PauliString, psi: np.ndarray) -> np.ndarray:
    """Matrix-free action of the string on a dense statevector."""
    dim = 1 << p.n_qubits
    if psi.shape[-1] != dim:
        raise PauliError("statevector dimension mismatch")
    idx = np.arange(dim)
    src = idx ^ p.x_mask
    zpar = np.array([(p.z_mask & int(s)).bit_count() & 1 for s in src])
    ph = (1j ** ((p.phase_exp + (p.x_mask & p.z_mask).bit_count()) % 4)) * np.where(zpar, -1.0, 1.0)
    return ph * psi[..., src]


def dense_pauli(p: PauliString) -> np.ndarray:
    """Dense 2^N x 2^N matrix of the string (desk scale)."""
    mat = np.array([[p.phase]], dtype=complex)
    for qubit in reversed(range(p.n_qubits)):
        xb = (p.x_mask >> qubit) & 1
        zb = (p.z_mask >> qubit) & 1
        site = "Y" if (xb and zb) else ("X" if xb else ("Z" if zb else "I"))
        mat = np.kron(mat, _SITE_MATS[site])
    return mat


# ---------------------------------------------------------------------------
# Time-dependent coefficients
# ---------------------------------------------------------------------------

_EXPR_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


class _ExprParser:
    """Recursive-descent parser for the tiny coefficient grammar.

    Supports +, -, *, /, ^, parentheses, the variable t, the functions
    sin/cos/exp, and numeric literals. Errors report the position.
    """

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, msg: str):
        raise CoefficientError(f"{msg} at position {self.pos} in {self.text!r}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        node = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.fail("unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            node = (op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.unary()
            node = (op, node, rhs)
        return node

    def unary(self):
        if self.peek() == "-":
            self.pos += 1
            return ("neg", self.unary())
        if self.peek() == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return ("^", base, self.unary())  # right associative
        return base

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                self.fail("expected ')'")
            self.pos += 1
            return node
        if ch.isdigit() or ch == ".":
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] in ".eE"):
                if self.text[self.pos] in "eE" and self.pos + 1 < len(self.text) and self.text[self.pos + 1] in "+-":
                    self.pos += 1
                self.pos += 1
            try:
                return ("num", float(self.text[start:self.pos]))
            except ValueError:
                self.pos = start
                self.fail("malformed number")
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalpha():
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "t":
                return ("t",)
            if name in _EXPR_FUNCS:
                if self.peek() != "(":
                    self.fail(f"expected '(' after {name}")
                self.pos += 1
                arg = self.expr()
                if self.peek() != ")":
                    self.fail("expected ')'")
                self.pos += 1
                return (name, arg)
            self.pos = start
            self.fail(f"unknown name {name!r}")
        self.fail("expected value")


def _eval_node(node, t: float) -> float:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "t":
        return t
    if op == "neg":
        return -_eval_node(node[1], t)
    if op in _EXPR_FUNCS:
        return _EXPR_FUNCS[op](_eval_node(node[1], t))
    a = _eval_node(node[1], t)
    b = _eval_node(node[2], t)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    if op == "^":
        return a ** b
    raise CoefficientError(f"bad expression node {op!r}")


@dataclass(frozen=True)
class CoefficientFn:
    """One time-dependent LCU coefficient g(t)."""

    variant: str
    params: dict = field(default_factory=dict, compare=False)
    _fn: Callable[[float], complex] = field(default=None, repr=False, compare=False)

    def __call__(self, t: float) -> complex:
        v = complex(self._fn(t))
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise CoefficientError(f"coefficient {self.variant} not finite at t={t}")
        return v.real if v.imag == 0.0 else v

    def describe(self) -> dict:
        return {"variant": self.variant, **{k: v for k, v in self.params.items() if not callable(v)}}


def _make_coefficient(variant: str, params: dict, fn: Callable[[float], complex]) -> CoefficientFn:
    return CoefficientFn(variant=variant, params=params, _fn=fn)


def parse_coefficient(spec: dict) -> CoefficientFn:
    """Turn a structured descriptor into an evaluable coefficient.

    Supported variants: constant, polynomial, trig, gaussian,
    spline_table, expression.
    """
    if not isinstance(spec, dict) or "variant" not in spec:
        raise CoefficientError("coefficient descriptor must be a dict with a 'variant' field")
    variant = spec["variant"]

    if variant == "constant":
        value = complex(spec["value"])
        if value.imag == 0:
            value = value.real
        return _make_coefficient(variant, {"value": value}, lambda t, v=value: v)

    if variant == "polynomial":
        coeffs = [complex(c) for c in spec["coeffs"]]
        if all(c.imag == 0 for c in coeffs):
            coeffs = [c.real for c in coeffs]

        def poly(t, cs=tuple(coeffs)):
            acc = 0.0
            for c in reversed(cs):
                acc = acc * t + c
            return acc

        return _make_coefficient(variant, {"coeffs": coeffs}, poly)

    if variant == "trig":
        amp = float(spec.get("amplitude", 1.0))
        freq = float(spec.get("frequency", 1.0))
        phase = float(spec.get("phase", 0.0))
        offset = float(spec.get("offset", 0.0))
        kind = spec.get("kind", "cos")
        if kind not in ("cos", "sin"):
            raise CoefficientError(f"trig kind must be cos or sin, got {kind!r}")
        base = math.cos if kind == "cos" else math.sin
        params = {"amplitude": amp, "frequency": freq, "phase": phase, "offset": offset, "kind": kind}
        return _make_coefficient(variant, params, lambda t: amp * base(freq * t + phase) + offset)

    if variant == "gaussian":
        amp = float(spec.get("amplitude", spec.get("A", 1.0)))
        center = float(spec.get("center", spec.get("t0", 0.0)))
        width = float(spec.get("width", spec.get("s", 1.0)))
        if width <= 0:
            raise CoefficientError("gaussian width must be positive")
        params = {"amplitude": amp, "center": center, "width": width}
        return _make_coefficient(variant, params, lambda t: amp * math.exp(-0.5 * ((t - center) / width) ** 2))

    if variant == "spline_table":
        times = np.asarray(spec["times"], dtype=float)
        values = np.asarray(spec["values"], dtype=float)
        if times.size < 4:
            raise CoefficientError("spline_table needs at least 4 abscissae")
        if times.size != values.size:
            raise CoefficientError("spline_table times/values length mismatch")
        if not np.all(np.diff(times) > 0):
            raise CoefficientError("spline_table abscissae must be strictly increasing")
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(times, values)
        params = {"times": times.tolist(), "values": values.tolist()}
        return _make_coefficient(variant, params, lambda t: float(spline(t)))

    if variant == "expression":
        text = spec["text"]
        tree = _ExprParser(text).parse()
        return _make_coefficient(variant, {"text": text}, lambda t: _eval_node(tree, t))

    raise CoefficientError(f"unknown coefficient variant {variant!r}")


def _sum_coefficient(parts: Sequence[tuple[complex, CoefficientFn]]) -> CoefficientFn:
    """Weighted sum of coefficients (internal, used when merging duplicates)."""
    parts = tuple(parts)

    def fn(t):
        return sum(w * g(t) for w, g in parts)

    return _make_coefficient("sum", {"terms": [g.describe() for _, g in parts]}, fn)


# ---------------------------------------------------------------------------
# LCU Hamiltonian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LcuHamiltonian:
    """H(t) = sum_g g(t) * P_g over a fixed horizon [0, T]."""

    n_qubits: int
    terms: tuple  # of (CoefficientFn, PauliString)
    horizon: float

    def __post_init__(self):
        if not self.terms:
            raise PauliError("LcuHamiltonian needs at least one term")
        if self.horizon <= 0:
            raise PauliError("horizon must be positive")
        for _, p in self.terms:
            if p.n_qubits != self.n_qubits:
                raise PauliError("Pauli string length mismatch in Hamiltonian")
        object.__setattr__(self, "terms", _merge_terms(self.terms))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(p for _, p in self.terms)

    @property
    def coefficients(self) -> tuple[CoefficientFn, ...]:
        return tuple(g for g, _ in self.terms)


def _merge_terms(terms) -> tuple:
    """Merge terms whose strings coincide up to global phase."""
    merged: dict[tuple[int, int], list] = {}
    order: list[tuple[int, int]] = []
    for g, p in terms:
        k = p.key()
        if k not in merged:
            merged[k] = [p, [(1.0, g)]]
            order.append(k)
        else:
            base = merged[k][0]
            # fold the relative i-power into the coefficient weight
            rel = (p.phase_exp - base.phase_exp) % 4
            merged[k][1].append((1j ** rel, g))
    out = []
    for k in order:
        p, parts = merged[k]
        if len(parts) == 1:
            out.append((parts[0][1], p))
        else:
            out.append((_sum_coefficient(parts), p))
    return tuple(out)


def _check_time(H: LcuHamiltonian, t: float):
    if t < -1e-12 or t > H.horizon + 1e-12:
        raise CoefficientError(f"time {t} outside domain [0, {H.horizon}]")


def eval_coefficients(H: LcuHamiltonian, t: float) -> np.ndarray:
    """Vector of g_gamma(t) for all terms."""
    _check_time(H, t)
    return np.array([g(t) for g, _ in H.terms], dtype=complex)


def dense_hamiltonian(H: LcuHamiltonian, t: float, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Dense 2^N x 2^N matrix of H(t); desk scale only."""
    if H.n_qubits > cap:
        raise QubitCapExceeded(f"{H.n_qubits} qubits exceeds dense cap {cap}")
    _check_time(H, t)
    dim = 1 << H.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for g, p in H.terms:
        out += complex(g(t)) * dense_pauli(p)
    return out
