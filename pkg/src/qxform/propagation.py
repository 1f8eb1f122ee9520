"""Time-ordered integration of i dU/dt = H(t) U on uniform grids, plus the
closed-form propagators of the uniformly rotating drive used as oracles.

The integrator is the midpoint-exponential rule: each step applies the exact
exponential of the Hamiltonian frozen at the step midpoint, so every step is
unitary by construction and the global error is second order in the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    _hermitian_expm_stack,
    hermitian_expm,
    normalization_defect,
    pauli_matrix,
)
from .schedules import Harmonic, NmrParams

# Traces are aborted, not repaired, beyond this unitarity defect.
DEFECT_LIMIT = 1e-8

_TRACE_MAGIC = "qxform-trace 1"


class UnitarityError(RuntimeError):
    """A propagated or stored unitary drifted beyond the defect limit."""

    def __init__(self, message: str, step_index: int, defect: float):
        super().__init__(message)
        self.step_index = step_index
        self.defect = defect


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with n_steps steps between t_start and t_end."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if not self.t_end > self.t_start:
            raise ValueError(
                f"grid needs t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)

    def midpoints(self) -> np.ndarray:
        t = self.times()
        return 0.5 * (t[:-1] + t[1:])

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, self.n_steps * int(factor))


def _stored_indices(n_steps: int, stride: int) -> np.ndarray:
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.asarray(idx, dtype=int)


@dataclass(frozen=True, eq=False)
class PropagatorTrace:
    """Unitaries U(t_k) on (a stride-decimated subset of) a time grid.

    The first stored unitary is the exact identity and every stored unitary
    is checked against the defect limit; the largest observed defect is kept
    in ``max_defect``.
    """

    grid: TimeGrid
    times: np.ndarray
    unitaries: np.ndarray
    generator_label: str = ""
    max_defect: float = 0.0

    @property
    def dim(self) -> int:
        return self.unitaries.shape[-1]

    @property
    def final(self) -> np.ndarray:
        return self.unitaries[-1]

    def node_index(self, t: float, strict: bool = False) -> int:
        """Index of the stored node nearest to t.

        Loose mode accepts any t within half a step of a stored node; strict
        mode requires t to hit a stored node to near machine precision and is
        meant for verification workflows.
        """
        k = int(np.argmin(np.abs(self.times - t)))
        gap = abs(float(self.times[k]) - t)
        scale = max(1.0, abs(self.grid.t_start), abs(self.grid.t_end))
        tol = 1e-9 * scale if strict else 0.5 * self.grid.dt
        if gap > tol:
            raise ValueError(
                f"time {t} is off the stored grid (nearest node {self.times[k]}, "
                f"gap {gap:.3e}, tolerance {tol:.3e})"
            )
        return k

    def at(self, t: float, strict: bool = False) -> np.ndarray:
        """The stored unitary at grid node t."""
        return self.unitaries[self.node_index(t, strict=strict)]

    def apply(self, psi0: np.ndarray, t: float | None = None, strict: bool = False) -> np.ndarray:
        """U(t) psi0; t defaults to the end of the grid."""
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape != (self.dim,):
            raise ValueError(f"state has shape {psi0.shape}, expected ({self.dim},)")
        nd = normalization_defect(psi0)
        if nd > 1e-9:
            raise ValueError(f"initial state is not normalized (defect {nd:.3e})")
        if t is None:
            t = float(self.times[-1])
        return self.at(t, strict=strict) @ psi0


def _batch_defects(us: np.ndarray) -> np.ndarray:
    eye = np.eye(us.shape[-1])
    gram = np.einsum("kji,kjl->kil", us.conj(), us)
    return np.sqrt((np.abs(gram - eye) ** 2).sum(axis=(1, 2)))


def _check_stored(us: np.ndarray, indices: np.ndarray, what: str) -> float:
    defects = _batch_defects(us)
    worst = int(np.argmax(defects))
    if defects[worst] > DEFECT_LIMIT:
        raise UnitarityError(
            f"{what} at step {int(indices[worst])} has unitarity defect "
            f"{defects[worst]:.3e} > {DEFECT_LIMIT:g}",
            step_index=int(indices[worst]),
            defect=float(defects[worst]),
        )
    return float(defects[worst])


def propagate(
    hamiltonian,
    grid: TimeGrid,
    label: str = "",
    stride: int = 1,
    block_size: int = 4096,
) -> PropagatorTrace:
    """Integrate i dU/dt = H(t) U with U(t_start) = I by midpoint exponentials.

    ``hamiltonian`` is anything with ``dim`` and ``matrix_stack(ts)``.  Every
    n-th node is retained per ``stride`` (the final node always is); a defect
    beyond the limit aborts with the offending step index.
    """
    stride = int(stride)
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    dim = hamiltonian.dim
    indices = _stored_indices(grid.n_steps, stride)
    est_bytes = len(indices) * dim * dim * 16
    if est_bytes > 2 * 2**30:
        raise ValueError(
            f"storing {len(indices)} unitaries of dimension {dim} needs "
            f"~{est_bytes / 2**30:.1f} GiB; increase the stride"
        )
    times = grid.times()
    mids = grid.midpoints()
    dt = grid.dt
    block = max(1, min(int(block_size), (1 << 22) // (dim * dim)))

    stored = np.empty((len(indices), dim, dim), dtype=complex)
    stored[0] = np.eye(dim)
    next_slot = 1
    u = np.eye(dim, dtype=complex)
    for lo in range(0, grid.n_steps, block):
        hi = min(lo + block, grid.n_steps)
        h_mid = hamiltonian.matrix_stack(mids[lo:hi])
        steps = _hermitian_expm_stack(h_mid, dt)
        step_defects = _batch_defects(steps)
        worst = int(np.argmax(step_defects))
        if step_defects[worst] > DEFECT_LIMIT:
            raise UnitarityError(
                f"step unitary {lo + worst} has defect {step_defects[worst]:.3e}",
                step_index=lo + worst,
                defect=float(step_defects[worst]),
            )
        for k in range(hi - lo):
            u = steps[k] @ u
            if next_slot < len(indices) and indices[next_slot] == lo + k + 1:
                stored[next_slot] = u
                next_slot += 1
    max_defect = _check_stored(stored, indices, "stored unitary")
    stored.flags.writeable = False
    stored_times = times[indices]
    stored_times.flags.writeable = False
    return PropagatorTrace(
        grid=grid,
        times=stored_times,
        unitaries=stored,
        generator_label=label,
        max_defect=max_defect,
    )


def sample_trace(fn, grid: TimeGrid, label: str = "", stride: int = 1) -> PropagatorTrace:
    """Build a trace by sampling a closed-form propagator t -> U(t) at grid nodes.

    The sample at t_start must equal the identity to within 1e-10; it is then
    snapped to the exact identity so composed transforms start at exactly I.
    """
    indices = _stored_indices(grid.n_steps, int(stride))
    times = grid.times()[indices]
    mats = np.stack([np.asarray(fn(t), dtype=complex) for t in times])
    first_gap = float(np.linalg.norm(mats[0] - np.eye(mats.shape[-1])))
    if first_gap > 1e-10:
        raise ValueError(
            f"sampled propagator at t={times[0]} deviates from identity by {first_gap:.3e}"
        )
    mats[0] = np.eye(mats.shape[-1])
    max_defect = _check_stored(mats, indices, "sampled unitary")
    mats.flags.writeable = False
    times.flags.writeable = False
    return PropagatorTrace(
        grid=grid, times=times, unitaries=mats, generator_label=label, max_defect=max_defect
    )


# ---------------------------------------------------------------------------
# Closed-form propagators for the uniformly rotating drive


def _require_harmonic(p: NmrParams) -> tuple:
    if not p.is_harmonic_case():
        raise ValueError(
            "closed-form propagators require a uniformly rotating drive phase "
            "and a constant qubit splitting"
        )
    return p.drive_phase.rate, p.detuning, p.drive_strength


def nmr_fast_propagator(p: NmrParams, t: float) -> np.ndarray:
    """Exact lab-frame propagator of the rotating drive:
    exp(-i w Z t / 2) exp(-i (2 g X - d Z) t / 2), d = w - splitting."""
    rate, detuning, g = _require_harmonic(p)
    z = pauli_matrix("Z")
    x = pauli_matrix("X")
    return hermitian_expm(z, 0.5 * rate * t) @ hermitian_expm(
        2.0 * g * x - detuning * z, 0.5 * t
    )


def nmr_slow_propagator(p: NmrParams, t: float) -> np.ndarray:
    """Exact rotated-frame propagator with the frame advancing at the detuning:
    exp(-i d Z t / 2) exp(-i (2 g X - d Z) t / 2)."""
    _, detuning, g = _require_harmonic(p)
    if not isinstance(p.frame_phase, Harmonic):
        raise ValueError("slow closed form requires a uniformly rotating frame phase")
    if abs(p.frame_phase.rate - detuning) > 1e-12 * max(1.0, abs(detuning)):
        raise ValueError(
            f"slow closed form requires the frame rate to equal the detuning "
            f"({p.frame_phase.rate} != {detuning})"
        )
    z = pauli_matrix("Z")
    x = pauli_matrix("X")
    return hermitian_expm(z, 0.5 * detuning * t) @ hermitian_expm(
        2.0 * g * x - detuning * z, 0.5 * t
    )


# ---------------------------------------------------------------------------
# Portable text serialization (binary-free, full double precision)


def write_trace(trace: PropagatorTrace, path) -> None:
    """Write one record per stored node: the node time, then the unitary
    row-major as 're im' pairs, all through repr so doubles round-trip."""
    with open(path, "w") as fh:
        fh.write(_TRACE_MAGIC + "\n")
        fh.write(f"label {trace.generator_label}\n")
        fh.write(
            f"grid {float(trace.grid.t_start)!r} {float(trace.grid.t_end)!r} {trace.grid.n_steps}\n"
        )
        fh.write(f"nodes {len(trace.times)} dim {trace.dim}\n")
        for t, u in zip(trace.times, trace.unitaries):
            fh.write(f"t {float(t)!r}\n")
            for row in u:
                fh.write(" ".join(f"{float(v.real)!r} {float(v.imag)!r}" for v in row) + "\n")


def read_trace(path) -> PropagatorTrace:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _TRACE_MAGIC:
        raise ValueError(f"{path}: not a trace file (missing '{_TRACE_MAGIC}' header)")
    label = lines[1].split(" ", 1)[1] if " " in lines[1] else ""
    g = lines[2].split()
    grid = TimeGrid(float(g[1]), float(g[2]), int(g[3]))
    hdr = lines[3].split()
    n_nodes, dim = int(hdr[1]), int(hdr[3])
    times = np.empty(n_nodes)
    mats = np.empty((n_nodes, dim, dim), dtype=complex)
    pos = 4
    for k in range(n_nodes):
        times[k] = float(lines[pos].split()[1])
        pos += 1
        for r in range(dim):
            vals = [float(x) for x in lines[pos].split()]
            mats[k, r] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
            pos += 1
    indices = np.arange(n_nodes)
    max_defect = _check_stored(mats, indices, "deserialized unitary")
    mats.flags.writeable = False
    times.flags.writeable = False
    return PropagatorTrace(
        grid=grid, times=times, unitaries=mats, generator_label=label, max_defect=max_defect
    )
