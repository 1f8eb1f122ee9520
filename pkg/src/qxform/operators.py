"""Dense complex matrix kernel: Pauli strings, tensor embedding, Hermitian
exponentials, and the phase-insensitive metrics used by every other module.

Conventions
-----------
Qubit 0 occupies the leftmost (most significant) tensor slot: the basis label
|b0 b1 ... b_{n-1}> maps to index sum_i b_i 2^(n-1-i).  All operators are
plain complex numpy arrays and hbar = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Dense storage keeps runs at desk scale; reject anything larger outright.
MAX_QUBITS = 10

_PAULI = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
_IDENTITY2 = np.eye(2, dtype=complex)
for _m in (*_PAULI.values(), _IDENTITY2):
    _m.flags.writeable = False


def pauli_matrix(axis: str) -> np.ndarray:
    """Return the standard 2x2 Pauli matrix for axis 'X', 'Y' or 'Z'."""
    try:
        return _PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected 'X', 'Y' or 'Z'") from None


def check_qubit_count(n_qubits: int) -> int:
    n = int(n_qubits)
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    if n > MAX_QUBITS:
        raise ValueError(
            f"{n} qubits exceeds the dense-storage limit of {MAX_QUBITS} "
            f"(dimension 2^{n}); this package is restricted to desk-scale systems"
        )
    return n


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Pauli factors with a real coefficient.

    ``factors`` holds (qubit index, axis) pairs; an empty tuple denotes the
    identity.  Factors are canonicalized to ascending qubit order and
    duplicate indices are rejected.
    """

    factors: tuple = ()
    coefficient: float = 1.0

    def __post_init__(self):
        facs = tuple((int(q), str(ax)) for q, ax in self.factors)
        for q, ax in facs:
            if q < 0:
                raise ValueError(f"negative qubit index {q} in Pauli string")
            if ax not in _PAULI:
                raise ValueError(f"unknown Pauli axis {ax!r} on qubit {q}")
        facs = tuple(sorted(facs))
        qubits = [q for q, _ in facs]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit indices in Pauli string: {qubits}")
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def support(self) -> frozenset:
        return frozenset(q for q, _ in self.factors)

    def is_diagonal(self) -> bool:
        """True when every factor is Z (identity included)."""
        return all(ax == "Z" for _, ax in self.factors)

    def matrix(self, n_qubits: int) -> np.ndarray:
        """Embed into the full 2^n_qubits space, identity on unlisted qubits."""
        n = check_qubit_count(n_qubits)
        axes = dict(self.factors)
        out_of_range = [q for q in axes if q >= n]
        if out_of_range:
            raise ValueError(
                f"qubit index {max(out_of_range)} out of range for {n} qubits"
            )
        if self.is_diagonal():
            return np.diag(self.coefficient * self._diagonal_signs(n)).astype(complex)
        out = np.array([[self.coefficient]], dtype=complex)
        for q in range(n):
            out = np.kron(out, _PAULI[axes[q]] if q in axes else _IDENTITY2)
        return out

    def _diagonal_signs(self, n_qubits: int) -> np.ndarray:
        idx = np.arange(2**n_qubits)
        signs = np.ones(2**n_qubits)
        for q, _ in self.factors:
            signs *= 1.0 - 2.0 * ((idx >> (n_qubits - 1 - q)) & 1)
        return signs

    def __mul__(self, other: "PauliString") -> "PauliString":
        """Product of two strings with disjoint supports."""
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.support & other.support:
            raise ValueError(
                "product is only defined for Pauli strings with disjoint supports; "
                f"overlap on qubits {sorted(self.support & other.support)}"
            )
        return PauliString(
            self.factors + other.factors, self.coefficient * other.coefficient
        )


# ---------------------------------------------------------------------------
# Hermitian / unitary health metrics and exponentials


def hermiticity_defect(a: np.ndarray) -> float:
    """Frobenius norm of A - A^dag."""
    a = np.asarray(a)
    return float(np.linalg.norm(a - a.conj().T))


def unitarity_defect(u: np.ndarray) -> float:
    """Frobenius norm of U^dag U - I."""
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def hermitian_expm(generator: np.ndarray, scale: float) -> np.ndarray:
    """exp(-1j * scale * generator) via eigendecomposition of the Hermitian generator.

    The input must be Hermitian within 1e-12 per matrix dimension; the result
    is unitary to machine precision.
    """
    g = np.asarray(generator, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"generator must be a square matrix, got shape {g.shape}")
    defect = hermiticity_defect(g)
    if defect > 1e-12 * g.shape[0]:
        raise ValueError(f"generator is not Hermitian (defect {defect:.3e})")
    w, v = np.linalg.eigh(g)
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def _hermitian_expm_stack(generators: np.ndarray, scale: float) -> np.ndarray:
    # Batched variant for the propagation loop; Hermiticity is validated by
    # the Hamiltonian evaluator that produced the stack.
    w, v = np.linalg.eigh(generators)
    phases = np.exp(-1j * scale * w)
    return np.einsum("kij,kj,klj->kil", v, phases, v.conj())


# ---------------------------------------------------------------------------
# Phase-insensitive metrics


class PhaseAlignment(NamedTuple):
    distance: float
    phase: float
    fallback: bool


def phase_align(a: np.ndarray, b: np.ndarray) -> PhaseAlignment:
    """Frobenius distance between A and B minimized over a global phase on B.

    The optimum phase is phi* = arg tr(B^dag A).  When that trace vanishes no
    phase is preferred; the plain Frobenius distance is returned with
    ``fallback`` set.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    tr = complex(np.einsum("ij,ij->", b.conj(), a))
    if abs(tr) == 0.0:
        return PhaseAlignment(float(np.linalg.norm(a - b)), 0.0, True)
    phi = math.atan2(tr.imag, tr.real)
    dist = float(np.linalg.norm(a - np.exp(1j * phi) * b))
    return PhaseAlignment(dist, phi, False)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    return phase_align(a, b).distance


# ---------------------------------------------------------------------------
# State vectors


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    n = check_qubit_count(n_qubits)
    dim = 2**n
    if not 0 <= int(index) < dim:
        raise ValueError(f"basis index {index} out of range for dimension {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[int(index)] = 1.0
    return psi


def _product_state(n_qubits: int, single: np.ndarray) -> np.ndarray:
    n = check_qubit_count(n_qubits)
    psi = single
    for _ in range(n - 1):
        psi = np.kron(psi, single)
    return psi


def plus_state(n_qubits: int) -> np.ndarray:
    """|+>^n, the +1 eigenstate of X on every qubit."""
    return _product_state(n_qubits, np.array([1.0, 1.0], dtype=complex) / math.sqrt(2))


def minus_state(n_qubits: int) -> np.ndarray:
    """|->^n, the -1 eigenstate of X on every qubit."""
    return _product_state(n_qubits, np.array([1.0, -1.0], dtype=complex) / math.sqrt(2))


def normalization_defect(psi: np.ndarray) -> float:
    return abs(float(np.linalg.norm(psi)) - 1.0)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized state vectors."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"state dimension mismatch: {a.shape} vs {b.shape}")
    for name, v in (("first", a), ("second", b)):
        nd = normalization_defect(v)
        if nd > 1e-9:
            raise ValueError(f"{name} state is not normalized (defect {nd:.3e})")
    return float(abs(np.vdot(a, b)) ** 2)
