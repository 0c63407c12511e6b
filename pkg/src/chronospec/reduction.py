"""K-moment variational basis and reduced equations of motion.

The full Schroedinger dynamics is projected onto the span of basis
states U_i|ref> built from cumulative products of Hamiltonian Pauli
strings; the reduced flow is d(alpha)/dt = A(t) alpha with
A(t) = -i sum_g g(t) N^{-1} M_g.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .pauli import (
    LcuHamiltonian,
    PauliError,
    PauliString,
    pauli_apply_basis,
    pauli_apply_state,
    pauli_product,
)

__all__ = [
    "VariationalBasis",
    "ReducedDynamics",
    "VariationalState",
    "build_kmoment_basis",
    "compute_reduced_operators",
    "assemble_A",
    "reconstruct_state",
]

PINV_CUTOFF = 1e-12
GRAM_SCHMIDT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class VariationalBasis:
    """Orthonormal basis {U_i |ref>} with U_0 = identity."""

    n_qubits: int
    generators: tuple  # of PauliString
    reference: object  # basis index (int) or dense statevector
    states: np.ndarray  # (N_alpha, 2^N) dense statevectors
    orthonormal: bool

    @property
    def size(self) -> int:
        return self.states.shape[0]

    def to_json_dict(self) -> dict:
        ref = int(self.reference) if np.isscalar(self.reference) else [
            [float(z.real), float(z.imag)] for z in np.asarray(self.reference)
        ]
        return {
            "n_qubits": self.n_qubits,
            "generators": [str(g) for g in self.generators],
            "reference": ref,
            "orthonormal": self.orthonormal,
        }


@dataclass(frozen=True)
class ReducedDynamics:
    """Overlap/coupling matrices and the effective coefficient matrix."""

    overlap: np.ndarray  # N, (N_a, N_a)
    couplings: tuple  # of M_gamma, each (N_a, N_a)
    precomputed: tuple  # of N^+ M_gamma
    coeffs: tuple  # of CoefficientFn
    numerical_rank: int = field(default=0)

    @property
    def size(self) -> int:
        return self.overlap.shape[0]

    def a_matrix(self, t: float) -> np.ndarray:
        return assemble_A(self, t)


@dataclass(frozen=True)
class VariationalState:
    """Variational parameter vector at a given time."""

    parameters: np.ndarray
    time: float


def build_kmoment_basis(H: LcuHamiltonian, reference, K: int) -> VariationalBasis:
    """Cumulative K-moment basis from the Hamiltonian's Pauli strings.

    Generators are all products of at most K Hamiltonian strings
    (orders 0..K, ascending, lexicographic index tuples within an
    order), deduplicated by the basis state they produce from the
    reference with global phase ignored.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    dim = 1 << H.n_qubits
    strings = H.strings

    if np.isscalar(reference):
        ref_idx = int(reference)
        if not 0 <= ref_idx < dim:
            raise PauliError(f"reference index {ref_idx} out of range")
        return _basis_from_index(H, ref_idx, K, strings, dim)

    ref_vec = np.asarray(reference, dtype=complex)
    if ref_vec.shape != (dim,):
        raise PauliError("reference statevector has wrong dimension")
    nrm = np.linalg.norm(ref_vec)
    if nrm == 0:
        raise PauliError("reference statevector must be nonzero")
    return _basis_from_vector(H, ref_vec / nrm, K, strings)


def _enumerate_products(strings, K: int):
    """Yield (generator string) in ascending order, lexicographic tuples."""
    n = strings[0].n_qubits
    yield PauliString.identity(n)
    for order in range(1, K + 1):
        for combo in itertools.product(range(len(strings)), repeat=order):
            g = strings[combo[0]]
            for j in combo[1:]:
                g = pauli_product(g, strings[j])
            yield g


def _basis_from_index(H, ref_idx, K, strings, dim):
    generators: list[PauliString] = []
    images: list[int] = []
    seen: set[int] = set()
    phases: list[complex] = []
    for g in _enumerate_products(strings, K):
        img, ph = pauli_apply_basis(g, ref_idx)
        if img in seen:
            continue
        seen.add(img)
        generators.append(g)
        images.append(img)
        phases.append(ph)
    states = np.zeros((len(images), dim), dtype=complex)
    for i, (img, ph) in enumerate(zip(images, phases)):
        states[i, img] = ph
    return VariationalBasis(
        n_qubits=H.n_qubits,
        generators=tuple(generators),
        reference=ref_idx,
        states=states,
        orthonormal=True,
    )


def _basis_from_vector(H, ref_vec, K, strings):
    """Gram-Schmidt fallback for non-basis references (modified, re-orthogonalized)."""
    generators: list[PauliString] = []
    kept: list[np.ndarray] = []
    for g in _enumerate_products(strings, K):
        v = pauli_apply_state(g, ref_vec)
        w = v.copy()
        for _ in range(2):  # re-orthogonalization pass
            for q in kept:
                w = w - np.vdot(q, w) * q
        nrm = np.linalg.norm(w)
        if nrm < GRAM_SCHMIDT_THRESHOLD:
            continue
        kept.append(w / nrm)
        generators.append(g)
    states = np.array(kept)
    return VariationalBasis(
        n_qubits=H.n_qubits,
        generators=tuple(generators),
        reference=ref_vec,
        states=states,
        orthonormal=True,
    )


def compute_reduced_operators(basis: VariationalBasis, H: LcuHamiltonian) -> ReducedDynamics:
    """Overlap matrix N and couplings M_gamma via sparse Pauli action."""
    if basis.n_qubits != H.n_qubits:
        raise PauliError("basis and Hamiltonian qubit counts differ")
    states = basis.states
    overlap = states.conj() @ states.T
    couplings = []
    for _, p in H.terms:
        acted = np.array([pauli_apply_state(p, states[j]) for j in range(basis.size)])
        couplings.append(states.conj() @ acted.T)
    sing = np.linalg.svd(overlap, compute_uv=False)
    rank = int(np.sum(sing > PINV_CUTOFF))
    n_pinv = np.linalg.pinv(overlap, rcond=PINV_CUTOFF / max(sing[0], 1.0))
    precomputed = tuple(n_pinv @ m for m in couplings)
    return ReducedDynamics(
        overlap=overlap,
        couplings=tuple(couplings),
        precomputed=precomputed,
        coeffs=H.coefficients,
        numerical_rank=rank,
    )


def assemble_A(rd: ReducedDynamics, t: float) -> np.ndarray:
    """Effective coefficient matrix A(t) = -i sum_g g(t) N^+ M_g."""
    out = np.zeros_like(rd.overlap)
    for g, nm in zip(rd.coeffs, rd.precomputed):
        out += complex(g(t)) * nm
    return -1j * out


def reconstruct_state(basis: VariationalBasis, vs) -> np.ndarray:
    """Physical statevector sum_i alpha_i |phi_i>."""
    params = vs.parameters if isinstance(vs, VariationalState) else np.asarray(vs)
    if params.shape != (basis.size,):
        raise ValueError(f"parameter length {params.shape} != basis size {basis.size}")
    return params @ basis.states
