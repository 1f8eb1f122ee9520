import numpy as np
import pytest
from scipy.linalg import expm

from qxform.hamiltonians import (
    IsingProblem,
    annealing_hamiltonian,
    nmr_hamiltonian,
)
from qxform.operators import basis_state, fidelity, phase_aligned_distance
from qxform.propagation import (
    PropagatorTrace,
    TimeGrid,
    UnitarityError,
    nmr_fast_propagator,
    nmr_slow_propagator,
    propagate,
    read_trace,
    sample_trace,
    write_trace,
)
from qxform.schedules import Constant, LinearRamp, NmrParams

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def constant_z_hamiltonian(w0):
    return nmr_hamiltonian(NmrParams(Constant(w0), 1e-30, Constant(0.0)))


class TestTimeGrid:
    def test_basic(self):
        g = TimeGrid(0.0, 2.0, 4)
        assert g.dt == 0.5
        np.testing.assert_allclose(g.times(), [0.0, 0.5, 1.0, 1.5, 2.0])
        np.testing.assert_allclose(g.midpoints(), [0.25, 0.75, 1.25, 1.75])
        assert g.refined(2).n_steps == 8

    def test_validation(self):
        with pytest.raises(ValueError, match="n_steps"):
            TimeGrid(0.0, 1.0, 0)
        with pytest.raises(ValueError, match="t_end"):
            TimeGrid(1.0, 1.0, 5)


class TestPropagate:
    def test_commuting_constant_generator_is_exact(self):
        # diagonal generator: U(t) = diag(exp(-i w0 t / 2), exp(+i w0 t / 2))
        w0 = 1.7
        trace = propagate(constant_z_hamiltonian(w0), TimeGrid(0.0, 3.0, 300))
        for t in (0.0, 1.0, 3.0):
            expected = np.diag([np.exp(-1j * w0 * t / 2), np.exp(1j * w0 * t / 2)])
            assert np.linalg.norm(trace.at(t) - expected) < 1e-12

    def test_zero_hamiltonian_stays_identity(self):
        problem = IsingProblem(2, fields=(0.0, 0.0))
        h = annealing_hamiltonian(Constant(0.0), problem)
        trace = propagate(h, TimeGrid(0.0, 1.0, 50))
        for u in trace.unitaries:
            assert np.linalg.norm(u - np.eye(4)) == 0.0

    def test_nmr_benchmark_against_analytic_oracle(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        grid = TimeGrid(0.0, 10.0, 2500)  # dt = 4e-3
        trace = propagate(nmr_hamiltonian(p), grid)
        worst = max(
            phase_aligned_distance(trace.unitaries[k], nmr_fast_propagator(p, float(trace.times[k])))
            for k in range(0, len(trace.times), 25)
        )
        assert worst < 5e-5

    def test_composition_over_subintervals(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        h = nmr_hamiltonian(p)
        first = propagate(h, TimeGrid(0.0, 0.8, 400))
        second = propagate(h, TimeGrid(0.8, 2.0, 600))
        union = propagate(h, TimeGrid(0.0, 2.0, 1000))
        lhs = second.final @ first.final
        assert np.linalg.norm(lhs - union.final) < 1e-10

    def test_unitarity_defects_within_limit(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        trace = propagate(nmr_hamiltonian(p), TimeGrid(0.0, 10.0, 5000))
        assert trace.max_defect <= 1e-10

    def test_stride_keeps_endpoints(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        grid = TimeGrid(0.0, 1.0, 103)
        trace = propagate(nmr_hamiltonian(p), grid, stride=10)
        assert trace.times[0] == 0.0
        assert trace.times[-1] == 1.0
        assert len(trace.times) == 12
        full = propagate(nmr_hamiltonian(p), grid)
        np.testing.assert_allclose(trace.final, full.final, atol=1e-14)

    def test_memory_guard_suggests_stride(self):
        problem = IsingProblem(10, fields=(0.0,) * 10)
        h = annealing_hamiltonian(Constant(0.0), problem)
        with pytest.raises(ValueError, match="stride"):
            propagate(h, TimeGrid(0.0, 1.0, 200_000))


class TestAnalyticPropagators:
    def test_identity_at_time_zero(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        np.testing.assert_allclose(nmr_fast_propagator(p, 0.0), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(nmr_slow_propagator(p, 0.0), np.eye(2), atol=1e-15)

    def test_resonant_drive_reduces_to_x_rotation(self):
        # zero detuning: u(t) = exp(-i g X t) and the lab factor is the frame
        p = NmrParams.harmonic(1.0, 1.0, 0.7)
        t = 1.3
        np.testing.assert_allclose(
            nmr_slow_propagator(p, t), expm(-1j * 0.7 * X * t), atol=1e-13
        )
        np.testing.assert_allclose(
            nmr_fast_propagator(p, t),
            expm(-1j * 1.0 * Z * t / 2) @ expm(-1j * 0.7 * X * t),
            atol=1e-13,
        )

    def test_fast_equals_slow_at_zero_splitting(self):
        p = NmrParams.harmonic(0.0, 1.5, 2.0)
        for t in (0.4, 2.0):
            np.testing.assert_allclose(
                nmr_fast_propagator(p, t), nmr_slow_propagator(p, t), atol=1e-14
            )

    def test_explicit_point_against_scipy_oracle(self):
        w0, w, g, t = 1.0, 1.5, 2.0, 0.7
        p = NmrParams.harmonic(w0, w, g)
        d = w - w0
        oracle = expm(-1j * w * Z * t / 2) @ expm(-1j * (2 * g * X - d * Z) * t / 2)
        np.testing.assert_allclose(nmr_fast_propagator(p, t), oracle, atol=1e-13)

    def test_solves_schrodinger_equation(self):
        # i dU/dt = H(t) U checked with a central difference

        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        h = nmr_hamiltonian(p)
        step = 1e-4
        for t in (0.5, 1.9, 6.0):
            du = (nmr_fast_propagator(p, t + step) - nmr_fast_propagator(p, t - step)) / (
                2 * step
            )
            residual = np.linalg.norm(1j * du - h.matrix(t) @ nmr_fast_propagator(p, t))
            assert residual < 1e-6

    def test_non_harmonic_phase_rejected(self):
        p = NmrParams(Constant(1.0), 1.0, LinearRamp(0.0, 2.0, 4.0))
        with pytest.raises(ValueError, match="rotating"):
            nmr_fast_propagator(p, 0.5)


class TestTraceAccess:
    def _trace(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        return propagate(nmr_hamiltonian(p), TimeGrid(0.0, 1.0, 10))

    def test_first_and_final(self):
        tr = self._trace()
        assert np.array_equal(tr.at(0.0), np.eye(2))
        np.testing.assert_allclose(tr.at(1.0), tr.final, atol=0)

    def test_loose_lookup_snaps_to_nearest(self):
        tr = self._trace()
        np.testing.assert_allclose(tr.at(0.46), tr.at(0.5), atol=0)

    def test_strict_lookup_rejects_off_node(self):
        tr = self._trace()
        with pytest.raises(ValueError, match="off the stored grid"):
            tr.at(0.45, strict=True)
        np.testing.assert_allclose(tr.at(0.5, strict=True), tr.at(0.5), atol=0)

    def test_far_off_grid_rejected_even_loose(self):
        tr = self._trace()
        with pytest.raises(ValueError, match="off the stored grid"):
            tr.at(1.3)

    def test_apply(self):
        problem = IsingProblem(2, fields=(0.0, 0.0))
        h = annealing_hamiltonian(Constant(0.0), problem)
        tr = propagate(h, TimeGrid(0.0, 1.0, 20))
        psi = tr.apply(basis_state(2, 1))
        assert fidelity(psi, basis_state(2, 1)) == pytest.approx(1.0, abs=1e-14)

    def test_apply_global_phase_only_for_diagonal_generator(self):
        tr = propagate(constant_z_hamiltonian(2.0), TimeGrid(0.0, 1.0, 100))
        psi = tr.apply(basis_state(1, 0))
        assert fidelity(psi, basis_state(1, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_apply_validates_state(self):
        tr = self._trace()
        with pytest.raises(ValueError, match="shape"):
            tr.apply(np.ones(4) / 2.0)
        with pytest.raises(ValueError, match="normalized"):
            tr.apply(np.array([1.0, 1.0]))


class TestSampleTrace:
    def test_rejects_non_identity_start(self):
        grid = TimeGrid(0.0, 1.0, 4)
        with pytest.raises(ValueError, match="identity"):
            sample_trace(lambda t: np.diag([1.0, -1.0]).astype(complex), grid)

    def test_rejects_non_unitary_samples(self):
        grid = TimeGrid(0.0, 1.0, 4)

        def fn(t):
            return np.eye(2, dtype=complex) * (1.0 + t)

        with pytest.raises(UnitarityError):
            sample_trace(fn, grid)

    def test_matches_function_at_nodes(self):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        grid = TimeGrid(0.0, 2.0, 8)
        tr = sample_trace(lambda t: nmr_fast_propagator(p, t), grid, label="oracle")
        np.testing.assert_allclose(tr.at(1.5), nmr_fast_propagator(p, 1.5), atol=1e-14)
        assert tr.generator_label == "oracle"


class TestTraceSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        p = NmrParams.harmonic(1.0, 1.5, 2.0)
        trace = propagate(nmr_hamiltonian(p), TimeGrid(0.0, 1.0, 16), label="round trip")
        path = tmp_path / "trace.txt"
        write_trace(trace, path)
        back = read_trace(path)
        assert back.grid == trace.grid
        assert back.generator_label == "round trip"
        assert np.array_equal(back.times, trace.times)
        assert np.array_equal(back.unitaries, trace.unitaries)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a trace\n")
        with pytest.raises(ValueError, match="trace file"):
            read_trace(path)
