"""Builders and evaluators for the Hamiltonian families used in the package:
the driven qubit, its rotated slow frame, transverse-field annealing over a
diagonal problem term, and the rapidly driven counterpart obtained by
conjugating the problem term qubit-wise around X.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .operators import PauliString, check_qubit_count, pauli_matrix
from .schedules import Constant, NmrParams, Schedule

_I2 = np.eye(2, dtype=complex)


# ---------------------------------------------------------------------------
# Derived coefficient functions (anything with .value(t) can drive a term)


@dataclass(frozen=True)
class _Scaled:
    base: Schedule
    factor: float

    def value(self, t):
        return self.factor * self.base.value(t)


@dataclass(frozen=True)
class _DriveTrig:
    """amplitude * cos(phase(t)) or amplitude * sin(phase(t))."""

    amplitude: float
    phase: Schedule
    harmonic: str  # "cos" | "sin"

    def value(self, t):
        fn = np.cos if self.harmonic == "cos" else np.sin
        return self.amplitude * fn(self.phase.value(t))


@dataclass(frozen=True)
class _FrameWeight:
    """(splitting + frame_phase' - drive_phase') / 2, the rotated-frame Z weight."""

    splitting: Schedule
    frame_phase: Schedule
    drive_phase: Schedule

    def value(self, t):
        return 0.5 * (
            self.splitting.value(t)
            + self.frame_phase.derivative(t)
            - self.drive_phase.derivative(t)
        )


@dataclass(frozen=True)
class _ShiftedRate:
    """base(t) + phase'(t); the transverse rate seen alongside a rotating frame."""

    base: Schedule
    phase: Schedule

    def value(self, t):
        return self.base.value(t) + self.phase.derivative(t)


# ---------------------------------------------------------------------------
# Time-dependent Hamiltonian


@dataclass(frozen=True, eq=False)
class FrameConjugatedTerms:
    """Diagonal Pauli strings conjugated qubit-wise by exp(-i phase(t) X).

    Each Z factor evaluates to cos(2 phase) Z - sin(2 phase) Y at time t; the
    common phase keeps the construction well defined for every string.
    """

    strings: tuple
    phase: Schedule

    def __post_init__(self):
        strings = tuple(self.strings)
        for s in strings:
            if not isinstance(s, PauliString) or not s.is_diagonal():
                raise ValueError(
                    "frame-conjugated terms must be Z-only Pauli strings"
                )
        object.__setattr__(self, "strings", strings)


def _kron_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (B,p,q) x (B,r,s) -> (B, p*r, q*s)
    B, p, q = a.shape
    r, s = b.shape[-2:]
    return np.einsum("bpq,brs->bprqs", a, b).reshape(B, p * r, q * s)


class TimeDependentHamiltonian:
    """A finite sum of coefficient(t) * PauliString terms plus optional
    frame-conjugated blocks, evaluating to a dense Hermitian matrix.

    Terms with plain-number or Constant coefficients are folded into a static
    matrix at construction.  Instances are immutable and safe to share across
    workers.
    """

    def __init__(self, n_qubits: int, terms=(), conjugated=()):
        self.n_qubits = check_qubit_count(n_qubits)
        self.dim = 2**self.n_qubits
        static = np.zeros((self.dim, self.dim), dtype=complex)
        varying_fns = []
        varying_mats = []
        stored_terms = []
        for coeff, string in terms:
            if not isinstance(string, PauliString):
                raise ValueError(f"expected a PauliString term, got {type(string).__name__}")
            mat = string.matrix(self.n_qubits)
            if isinstance(coeff, (int, float)):
                static += float(coeff) * mat
                stored_terms.append((Constant(float(coeff)), string))
            elif isinstance(coeff, Constant):
                static += coeff.c * mat
                stored_terms.append((coeff, string))
            else:
                varying_fns.append(coeff)
                varying_mats.append(mat)
                stored_terms.append((coeff, string))
        self.terms = tuple(stored_terms)
        self.conjugated = tuple(conjugated)
        for block in self.conjugated:
            if not isinstance(block, FrameConjugatedTerms):
                raise ValueError("conjugated entries must be FrameConjugatedTerms")
            for s in block.strings:
                if s.support and max(s.support) >= self.n_qubits:
                    raise ValueError(
                        f"conjugated string on qubit {max(s.support)} exceeds {self.n_qubits} qubits"
                    )
        self._static = static
        self._static.flags.writeable = False
        self._varying_fns = tuple(varying_fns)
        if varying_mats:
            self._varying_mats = np.stack(varying_mats)
            self._varying_mats.flags.writeable = False
        else:
            self._varying_mats = None

    def matrix(self, t: float) -> np.ndarray:
        """Dense Hermitian matrix at time t."""
        return self.matrix_stack(np.asarray([t], dtype=float))[0]

    def matrix_stack(self, ts) -> np.ndarray:
        """Dense Hermitian matrices at a batch of times, shape (len(ts), dim, dim)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        B = ts.size
        out = np.repeat(self._static[None, :, :], B, axis=0)
        if self._varying_mats is not None:
            vals = np.stack(
                [np.asarray(fn.value(ts), dtype=float) for fn in self._varying_fns]
            )
            out += np.einsum("kb,kij->bij", vals, self._varying_mats)
        for block in self.conjugated:
            phi = np.asarray(block.phase.value(ts), dtype=float)
            c = np.cos(2.0 * phi)
            s = np.sin(2.0 * phi)
            conj_z = np.zeros((B, 2, 2), dtype=complex)
            conj_z[:, 0, 0] = c
            conj_z[:, 0, 1] = 1j * s
            conj_z[:, 1, 0] = -1j * s
            conj_z[:, 1, 1] = -c
            ident = np.broadcast_to(_I2, (B, 2, 2))
            for string in block.strings:
                zset = string.support
                cur = np.full((B, 1, 1), string.coefficient, dtype=complex)
                for q in range(self.n_qubits):
                    cur = _kron_stack(cur, conj_z if q in zset else ident)
                out += cur
        skew = out - out.conj().transpose(0, 2, 1)
        defect = float(np.sqrt((np.abs(skew) ** 2).sum(axis=(1, 2)).max()))
        if defect > 1e-12:
            raise RuntimeError(
                f"evaluated Hamiltonian is not Hermitian (defect {defect:.3e}); "
                "a coefficient function returned a non-real value"
            )
        return out


# ---------------------------------------------------------------------------
# Problem terms (diagonal in Z)


@dataclass(frozen=True)
class GroverProblem:
    """Search problem whose cost term is I - |marked><marked|."""

    n_qubits: int
    marked: int

    def __post_init__(self):
        n = check_qubit_count(self.n_qubits)
        if not 0 <= int(self.marked) < 2**n:
            raise ValueError(
                f"marked index {self.marked} out of range for {n} qubits"
            )

    def marked_bits(self) -> tuple:
        n = self.n_qubits
        return tuple((self.marked >> (n - 1 - i)) & 1 for i in range(n))

    def pauli_terms(self) -> tuple:
        """I - |marked><marked| expanded as the diagonal projector product
        prod_i (I + (-1)^{b_i} Z_i)/2 into 2^n Z-strings."""
        n = self.n_qubits
        bits = self.marked_bits()
        weight = 2.0**-n
        terms = [PauliString((), 1.0 - weight)]
        for r in range(1, n + 1):
            for subset in itertools.combinations(range(n), r):
                sign = 1.0
                for i in subset:
                    sign *= -1.0 if bits[i] else 1.0
                terms.append(
                    PauliString(tuple((i, "Z") for i in subset), -sign * weight)
                )
        return tuple(terms)

    def energy_scale(self) -> float:
        return 1.0


@dataclass(frozen=True)
class IsingProblem:
    """Local fields and two-body ZZ couplings, diagonal in the Z basis."""

    n_qubits: int
    fields: tuple
    couplings: tuple = ()

    def __post_init__(self):
        n = check_qubit_count(self.n_qubits)
        fields = tuple(float(h) for h in self.fields)
        if len(fields) != n:
            raise ValueError(f"expected {n} local fields, got {len(fields)}")
        seen = set()
        canon = []
        for entry in self.couplings:
            i, j, coupling = int(entry[0]), int(entry[1]), float(entry[2])
            if i == j:
                raise ValueError(f"coupling ({i},{j}) lies on the diagonal")
            i, j = min(i, j), max(i, j)
            if j >= n:
                raise ValueError(f"coupling index {j} out of range for {n} qubits")
            if (i, j) in seen:
                raise ValueError(f"duplicate coupling for pair ({i},{j})")
            seen.add((i, j))
            canon.append((i, j, coupling))
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "couplings", tuple(sorted(canon)))

    def pauli_terms(self) -> tuple:
        terms = [
            PauliString(((i, "Z"),), h)
            for i, h in enumerate(self.fields)
            if h != 0.0
        ]
        terms += [
            PauliString(((i, "Z"), (j, "Z")), coupling)
            for i, j, coupling in self.couplings
            if coupling != 0.0
        ]
        return tuple(terms)

    def energy_scale(self) -> float:
        h_max = max((abs(h) for h in self.fields), default=0.0)
        j_max = max((abs(c) for _, _, c in self.couplings), default=0.0)
        return max(h_max, j_max)

    @classmethod
    def from_edge_list(cls, path, n_qubits: int | None = None) -> "IsingProblem":
        """Parse a plain-text edge list: ``i h_i`` lines for fields and
        ``i j J_ij`` lines for couplings; '#' starts a comment."""
        fields = {}
        couplings = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                try:
                    if len(parts) == 2:
                        fields[int(parts[0])] = float(parts[1])
                    elif len(parts) == 3:
                        couplings.append((int(parts[0]), int(parts[1]), float(parts[2])))
                    else:
                        raise ValueError("expected 2 or 3 columns")
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: cannot parse {line!r} ({exc})") from None
        indices = set(fields) | {i for i, _, _ in couplings} | {j for _, j, _ in couplings}
        if not indices and n_qubits is None:
            raise ValueError(f"{path}: empty edge list and no qubit count given")
        n = n_qubits if n_qubits is not None else max(indices) + 1
        field_vec = tuple(fields.get(i, 0.0) for i in range(n))
        return cls(n_qubits=n, fields=field_vec, couplings=tuple(couplings))


def default_transverse_strength(problem) -> float:
    """Initial transverse field dominating the problem scale: 2 max(scale, 1)."""
    return 2.0 * max(problem.energy_scale(), 1.0)


# ---------------------------------------------------------------------------
# Builders


def nmr_hamiltonian(p: NmrParams) -> TimeDependentHamiltonian:
    """(splitting(t)/2) Z + g [X cos(drive_phase) + Y sin(drive_phase)] on one qubit."""
    g = p.drive_strength
    return TimeDependentHamiltonian(
        1,
        terms=(
            (_Scaled(p.qubit_splitting, 0.5), PauliString(((0, "Z"),))),
            (_DriveTrig(g, p.drive_phase, "cos"), PauliString(((0, "X"),))),
            (_DriveTrig(g, p.drive_phase, "sin"), PauliString(((0, "Y"),))),
        ),
    )


def rotating_frame_hamiltonian(p: NmrParams) -> TimeDependentHamiltonian:
    """The same qubit seen from the frame whose drive phase is ``frame_phase``:
    ((splitting + frame_phase' - drive_phase')/2) Z + g [X cos + Y sin](frame_phase).

    The transverse amplitude g carries over unchanged into the rotated frame.
    """
    if p.frame_phase is None:
        raise ValueError("rotating-frame Hamiltonian requires frame_phase")
    g = p.drive_strength
    return TimeDependentHamiltonian(
        1,
        terms=(
            (
                _FrameWeight(p.qubit_splitting, p.frame_phase, p.drive_phase),
                PauliString(((0, "Z"),)),
            ),
            (_DriveTrig(g, p.frame_phase, "cos"), PauliString(((0, "X"),))),
            (_DriveTrig(g, p.frame_phase, "sin"), PauliString(((0, "Y"),))),
        ),
    )


def annealing_hamiltonian(transverse: Schedule, problem) -> TimeDependentHamiltonian:
    """transverse(t) * sum_i X_i plus the problem's diagonal terms."""
    n = problem.n_qubits
    terms = [(transverse, PauliString(((i, "X"),))) for i in range(n)]
    terms += [(1.0, s) for s in problem.pauli_terms()]
    return TimeDependentHamiltonian(n, terms=terms)


def fast_counterpart_hamiltonian(
    transverse: Schedule, problem, phase: Schedule
) -> TimeDependentHamiltonian:
    """(transverse(t) + phase'(t)) * sum_i X_i plus the problem terms conjugated
    qubit-wise by exp(-i phase(t) X); reduces to ``annealing_hamiltonian`` at
    phase identically zero."""
    n = problem.n_qubits
    rate = _ShiftedRate(transverse, phase)
    terms = [(rate, PauliString(((i, "X"),))) for i in range(n)]
    return TimeDependentHamiltonian(
        n,
        terms=terms,
        conjugated=(FrameConjugatedTerms(problem.pauli_terms(), phase),),
    )


# ---------------------------------------------------------------------------
# Instantaneous spectra


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Full instantaneous spectrum: ascending energies, orthonormal column
    eigenvectors, the ground gap and a near-degeneracy flag."""

    energies: np.ndarray
    states: np.ndarray
    gap: float
    degenerate: bool

    def state(self, k: int) -> np.ndarray:
        return self.states[:, k]


def instantaneous_eigensystem(
    hamiltonian: TimeDependentHamiltonian, t: float, degeneracy_tol: float = 1e-10
) -> Eigensystem:
    """Eigendecomposition of the Hamiltonian frozen at time t.

    Degenerate subspaces come back with an arbitrary orthonormal basis; the
    ``degenerate`` flag is set when the ground gap falls below the tolerance.
    """
    matrix = hamiltonian.matrix(t)
    energies, states = np.linalg.eigh(matrix)
    gap = float(energies[1] - energies[0])
    energies.flags.writeable = False
    states.flags.writeable = False
    return Eigensystem(energies, states, gap, gap < degeneracy_tol)
