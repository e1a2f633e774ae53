import numpy as np
import pytest

from transmonsim.device import ChainSpec, TransmonSpec
from transmonsim.dynamics import (
    average_gate_fidelity,
    exact_evolve,
    exact_propagator,
    find_avoided_crossing,
    fit_error_scaling,
    labeled_branch_gap,
    run_cphase_protocol,
    trotter_error,
    trotter_evolve,
    trotter_scan,
)
from transmonsim.errors import CalibrationError
from transmonsim.paulis import GRAY, STANDARD_BINARY, PauliSum, PauliTerm
from transmonsim.pulses import (
    PulseSchedule,
    _Component,
    build_drag_schedule,
    constant_schedule,
    drag_spec_from_transmon,
)
from transmonsim.statevector import RandomSeed, StateVector


def two_level_z_schedule(total_time):
    """H = 0.5 GHz * Z on one qubit, constant in time."""
    dense = 0.5 * np.diag([1.0, -1.0]).astype(complex)
    return PulseSchedule(
        1, ("Z",), (_Component(1.0, np.array([0.5]), dense),), total_time
    )


class TestExactEvolve:
    def test_larmor_precession(self):
        # <X>(t) = cos(2 pi t) for H = Z/2 GHz starting from |+>
        sched = two_level_z_schedule(0.73)
        plus = StateVector(1, np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0))
        out = exact_evolve(sched, plus)
        x = 2.0 * np.real(out.amplitudes[0].conj() * out.amplitudes[1])
        assert x == pytest.approx(np.cos(2.0 * np.pi * 0.73), abs=1e-9)

    def test_zero_hamiltonian(self):
        sched = PulseSchedule(
            1, ("Z",), (_Component(1.0, np.array([0.0]), np.zeros((2, 2), complex)),), 5.0
        )
        st = StateVector(1, np.array([0.6, 0.8j], dtype=complex))
        out = exact_evolve(sched, st)
        assert np.max(np.abs(out.amplitudes - st.amplitudes)) < 1e-15

    def test_unitarity(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        u = exact_propagator(build_drag_schedule(spec))
        assert np.max(np.abs(u.conj().T @ u - np.eye(16))) < 1e-10

    def test_drag_population_transfer(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        out = exact_evolve(sched, StateVector(4))
        # gray code words: level 0 -> index 0, level 1 -> index 1
        assert abs(out.amplitudes[1]) ** 2 >= 0.99

    def test_ref_step_larger_than_total_rejected(self):
        sched = two_level_z_schedule(1.0)
        with pytest.raises(ValueError):
            exact_evolve(sched, StateVector(1), ref_step=2.0)


class TestTrotterEvolve:
    def test_single_term_exact_for_any_k(self, rng):
        sched = two_level_z_schedule(3.1)
        amps = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        st = StateVector(1, amps / np.linalg.norm(amps))
        exact = exact_evolve(sched, st)
        for k in (1, 3, 17):
            trot = trotter_evolve(sched, st, k)
            assert trotter_error(trot, exact) < 1e-12

    def test_matches_exact_at_large_k(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        st = StateVector(4, np.zeros(16, complex))
        st.amplitudes[0] = st.amplitudes[1] = 1.0 / np.sqrt(2.0)
        exact = exact_evolve(sched, st)
        assert trotter_error(trotter_evolve(sched, st, 4000), exact) < 1e-8

    def test_norm_preserved(self, single_transmon, rng):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        amps = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        st = StateVector(4, amps / np.linalg.norm(amps))
        out = trotter_evolve(sched, st, 500)
        assert abs(out.norm() - 1.0) < 1e-10

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            trotter_evolve(two_level_z_schedule(1.0), StateVector(1), 0)

    def test_encoding_independence(self, single_transmon):
        # gray and standard-binary skeletons converge to the same exact state
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        st_gray = trotter_evolve(build_drag_schedule(spec, GRAY), StateVector(4), 16000)
        sched_bin = build_drag_schedule(spec, STANDARD_BINARY)
        from transmonsim.paulis import encoding_permutation

        # standard-binary places level n at a different basis index
        st_bin = trotter_evolve(sched_bin, StateVector(4), 16000)
        pg = encoding_permutation(16, GRAY)
        pb = encoding_permutation(16, STANDARD_BINARY)
        a = np.empty(16, complex)
        a[pg] = 0.0
        a_levels = st_gray.amplitudes[pg]
        b_levels = st_bin.amplitudes[pb]
        overlap = abs(np.vdot(a_levels, b_levels)) ** 2
        assert 1.0 - overlap < 1e-6


class TestTrotterError:
    def test_identical_states(self, rng):
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        st = StateVector(2, amps / np.linalg.norm(amps))
        assert trotter_error(st, st.copy()) == 0.0

    def test_orthogonal_states(self):
        a = StateVector(1, np.array([1.0, 0.0], complex))
        b = StateVector(1, np.array([0.0, 1.0], complex))
        assert trotter_error(a, b) == pytest.approx(1.0)

    def test_global_phase_invariance(self, rng):
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        amps /= np.linalg.norm(amps)
        a = StateVector(2, amps)
        b = StateVector(2, np.exp(1.3j) * amps)
        assert trotter_error(a, b) == pytest.approx(0.0, abs=1e-14)


class TestFidelity:
    def test_ideal_channel_unit_fidelity(self, rng):
        basis = np.eye(8, 2).astype(complex)
        ideal = np.array([[0, 1], [1, 0]], dtype=complex)

        def channel(st):
            out = st.copy()
            a, b = out.amplitudes[0], out.amplitudes[1]
            out.amplitudes[0], out.amplitudes[1] = b, a
            return out

        rep = average_gate_fidelity(channel, ideal, basis, 50, RandomSeed(3))
        assert rep.mean == pytest.approx(1.0, abs=1e-12)
        assert rep.std == pytest.approx(0.0, abs=1e-12)

    def test_identity_vs_x_haar_average(self):
        # |<psi|X|psi>|^2 averages to 1/3 on the Bloch sphere
        basis = np.eye(4, 2).astype(complex)
        ideal = np.array([[0, 1], [1, 0]], dtype=complex)
        rep = average_gate_fidelity(lambda st: st.copy(), ideal, basis, 10_000, RandomSeed(9))
        assert rep.mean == pytest.approx(1.0 / 3.0, abs=0.02)

    def test_sample_count_validated(self):
        basis = np.eye(4, 2).astype(complex)
        with pytest.raises(ValueError, match="sample"):
            average_gate_fidelity(lambda st: st, np.eye(2, dtype=complex), basis, 0, RandomSeed(1))

    def test_bounds(self, rng):
        basis = np.eye(4, 2).astype(complex)
        ideal = np.eye(2, dtype=complex)

        def noisy(st):
            out = st.copy()
            out.amplitudes = np.roll(out.amplitudes, 1)
            return out

        rep = average_gate_fidelity(noisy, ideal, basis, 64, RandomSeed(2))
        assert 0.0 <= rep.mean <= 1.0
        assert rep.std >= 0.0


class TestAvoidedCrossing:
    def test_reference_device(self, two_transmon_device):
        f_star, gap, interior = find_avoided_crossing(two_transmon_device, (0.0, 0.15))
        assert interior
        assert 0.05 < f_star < 0.09
        assert 0.02 < gap < 0.12

    def test_decoupled_gap_closes(self, two_transmon_device):
        t1, t2 = two_transmon_device.transmons
        dev0 = ChainSpec((t1, t2), (0.0,))
        f_star, gap, interior = find_avoided_crossing(dev0, (0.0, 0.15))
        assert interior
        assert gap < 1e-9

    def test_flux_reflection_symmetry(self, two_transmon_device):
        f_star, _, _ = find_avoided_crossing(two_transmon_device, (0.0, 0.15))
        g1 = labeled_branch_gap(two_transmon_device, f_star)
        g2 = labeled_branch_gap(two_transmon_device, -f_star)
        assert g1 == pytest.approx(g2, abs=1e-12)

    def test_boundary_flag_when_no_crossing(self, two_transmon_device):
        f_star, gap, interior = find_avoided_crossing(two_transmon_device, (0.0, 0.02))
        assert not interior


@pytest.mark.slow
class TestCphaseProtocol:
    def test_calibration_d8(self, two_transmon_device):
        result = run_cphase_protocol(two_transmon_device, d_each=8)
        rec = result.record
        assert 0.5 * 104.64 <= rec.gate_time_ns <= 1.5 * 104.64
        assert abs(abs(rec.conditional_phase) - np.pi) < 0.05
        assert rec.population_return > 0.99
        assert rec.channel_deviation < 0.05
        rep = average_gate_fidelity(
            result.channel, result.ideal, result.subspace_basis, 200, RandomSeed(4)
        )
        assert rep.mean > 0.99

    def test_decoupled_calibration_fails(self, two_transmon_device):
        t1, t2 = two_transmon_device.transmons
        dev0 = ChainSpec((t1, t2), (0.0,))
        with pytest.raises(CalibrationError):
            run_cphase_protocol(dev0, d_each=8)


class TestScalingFit:
    def test_clean_power_law(self):
        dts = np.array([1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2])
        errors = 7.0 * dts**2.5
        fit = fit_error_scaling(dts, errors)
        assert fit.exponent == pytest.approx(2.5, abs=1e-9)
        assert fit.prefactor == pytest.approx(7.0, rel=1e-6)
        assert not fit.degenerate

    def test_tail_selection_drops_plateau(self):
        dts = np.array([1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3])
        errors = 5.0 * dts**3
        errors[-2:] = 0.9  # saturated plateau at large dt
        fit = fit_error_scaling(dts, errors)
        assert fit.exponent == pytest.approx(3.0, abs=0.05)
        assert fit.dt_range[1] <= 8e-4 + 1e-12

    def test_degenerate_when_floor(self):
        dts = np.array([1e-3, 2e-3, 4e-3])
        errors = np.array([1e-14, 5e-14, 2e-13])
        fit = fit_error_scaling(dts, errors)
        assert fit.degenerate

    def test_scan_single_term_flagged_degenerate(self, rng):
        sched = two_level_z_schedule(2.0)
        basis = np.eye(2, 2).astype(complex)
        scan = trotter_scan(sched, [2, 4, 8], basis, 4, RandomSeed(6))
        assert all(p.mean_error < 1e-12 for p in scan.points)
        assert scan.fit.degenerate


class TestTrotterScan:
    def test_bitflip_scan_shape(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        basis = np.zeros((16, 2), complex)
        basis[0, 0] = basis[1, 1] = 1.0
        ideal = np.array([[0, 1], [1, 0]], dtype=complex)
        scan = trotter_scan(sched, [50, 100, 200], basis, 25, RandomSeed(8), ideal=ideal)
        errs = [p.mean_error for p in scan.points]
        assert errs[0] > errs[-1]  # improves monotonically here
        assert all(0.0 <= p.mean_fidelity <= 1.0 for p in scan.points)
        assert all(p.dt_ns == pytest.approx(85.32 / p.num_steps) for p in scan.points)

    def test_monotone_improvement_within_std(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        basis = np.zeros((16, 2), complex)
        basis[0, 0] = basis[1, 1] = 1.0
        scan = trotter_scan(sched, [125, 250, 500, 1000], basis, 40, RandomSeed(12))
        for a, b in zip(scan.points[:-1], scan.points[1:]):
            assert b.mean_error <= a.mean_error + a.std_error

    def test_first_order_consistency(self, single_transmon):
        # fitted exponent never below the first-order bound
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        basis = np.zeros((16, 2), complex)
        basis[0, 0] = basis[1, 1] = 1.0
        scan = trotter_scan(sched, [1000, 2000, 4000, 8000, 16000], basis, 10, RandomSeed(3))
        assert scan.fit.exponent >= 1.0

    def test_k_list_must_ascend(self, single_transmon):
        sched = two_level_z_schedule(1.0)
        with pytest.raises(ValueError):
            trotter_scan(sched, [100, 50], np.eye(2, 1).astype(complex), 2, RandomSeed(1))
