import numpy as np
import pytest
from scipy.integrate import quad

from transmonsim.device import build_single_hamiltonian, exact_spectrum
from transmonsim.hamiltonians import (
    chain_encoding_permutation,
    encode_chain_hamiltonian,
    permute_to_encoded,
)
from transmonsim.device import build_chain_hamiltonian
from transmonsim.paulis import GRAY, STANDARD_BINARY, PauliSum, PauliTerm, matrix_of
from transmonsim.pulses import (
    DragSpec,
    build_drag_schedule,
    constant_schedule,
    cphase_schedule,
    drag_envelope,
    drag_spec_from_transmon,
)


def skeleton_matrix(schedule, t):
    coeffs = schedule.coefficients(t)
    out = np.zeros((schedule.dim, schedule.dim), dtype=complex)
    for c, axes in zip(coeffs, schedule.skeleton.axes):
        out += c * matrix_of(PauliSum(schedule.num_qubits, [PauliTerm(1.0, axes)]))
    return out


class TestEnvelope:
    def test_zero_at_endpoints(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        assert drag_envelope(0.0, spec) == pytest.approx(0.0, abs=1e-15)
        assert drag_envelope(85.32, spec) == pytest.approx(0.0, abs=1e-15)

    def test_area_is_pi(self, single_transmon):
        for sigma in (None, 10.0, 20.0):
            spec = drag_spec_from_transmon(single_transmon, 16, 85.32, sigma_ns=sigma)
            area, _ = quad(lambda t: drag_envelope(t, spec), 0.0, 85.32, limit=200)
            assert area == pytest.approx(np.pi, abs=1e-6)

    def test_non_negative_for_moderate_sigma(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)  # sigma = tg/6
        ts = np.linspace(0.0, 85.32, 2001)
        assert np.min(drag_envelope(ts, spec)) >= 0.0

    def test_domain_error(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        with pytest.raises(ValueError):
            drag_envelope(-1.0, spec)
        with pytest.raises(ValueError):
            drag_envelope(90.0, spec)

    def test_default_sigma(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        assert spec.sigma == pytest.approx(85.32 / 6.0)


class TestDragSpec:
    def test_anharmonicities_from_spectrum(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        w = exact_spectrum(build_single_hamiltonian(single_transmon, 16), 16).eigenvalues
        w = w - w[0]
        assert spec.anharmonicities_ghz[0] == pytest.approx(0.0, abs=1e-9)
        assert spec.anharmonicities_ghz[1] == pytest.approx(w[2] - 2 * w[1], abs=1e-9)

    def test_default_ladder_is_bosonic(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        assert np.allclose(spec.ladder, np.sqrt(np.arange(1, 16)))
        assert spec.ladder[0] == 1.0

    def test_missing_anharmonicities_rejected(self):
        with pytest.raises(ValueError, match="anharmonicities"):
            DragSpec(gate_time_ns=50.0, truncation_d=16, anharmonicities_ghz=(0.0, -0.2))


class TestDragSchedule:
    def test_two_level_limit_is_rabi(self):
        spec = DragSpec(gate_time_ns=50.0, truncation_d=2, anharmonicities_ghz=(0.0,))
        sched = build_drag_schedule(spec)
        t = 20.0
        expected = drag_envelope(t, spec) / (2.0 * np.pi) / 2.0 * np.array([[0, 1], [1, 0]])
        assert np.max(np.abs(sched.dense(t) - expected)) < 1e-14

    def test_skeleton_matches_dense(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        for scheme in (GRAY, STANDARD_BINARY):
            sched = build_drag_schedule(spec, scheme)
            for t in (0.0, 13.7, 42.66, 85.32):
                assert np.max(np.abs(skeleton_matrix(sched, t) - sched.dense(t))) < 1e-12

    def test_drive_coefficient_readoff(self, single_transmon):
        # the 0<->1 matrix element of the drive is envelope/2 in angular units
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        perm = chain_encoding_permutation(16, 1, GRAY)
        t = 85.32 / 2.0
        dense = sched.dense(t)
        drive_01 = dense[perm[0], perm[1]]
        assert drive_01 == pytest.approx(drag_envelope(t, spec) / 2.0 / (2 * np.pi), abs=1e-12)

    def test_quadrature_component(self, single_transmon):
        spec = drag_spec_from_transmon(
            single_transmon, 16, 85.32, quadrature_fn=lambda t: 0.01 * np.sin(0.1 * np.asarray(t))
        )
        sched = build_drag_schedule(spec)
        t = 30.0
        assert np.max(np.abs(skeleton_matrix(sched, t) - sched.dense(t))) < 1e-12
        # the quadrature enters anti-Hermitian off-diagonals (times i)
        perm = chain_encoding_permutation(16, 1, GRAY)
        assert abs(sched.dense(t)[perm[0], perm[1]].imag) > 0

    def test_hermitian_at_all_times(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        for t in np.linspace(0, 85.32, 7):
            h = sched.dense(t)
            assert np.max(np.abs(h - h.conj().T)) < 1e-14


class TestThetaTable:
    def test_shape_and_values(self, single_transmon):
        spec = drag_spec_from_transmon(single_transmon, 16, 85.32)
        sched = build_drag_schedule(spec)
        table = sched.theta_table(10)
        assert table.shape == (10, sched.num_terms)
        dt = 85.32 / 10
        mid = 3.5 * dt
        expected = 4.0 * np.pi * dt * sched.coefficients(mid)
        assert np.max(np.abs(table[3] - expected)) < 1e-12


class TestCphaseSchedule:
    def test_single_segment_when_hold_is_total(self, two_transmon_device):
        sched = cphase_schedule(two_transmon_device, 0.064, 100.0, d_each=8)
        assert sched.breakpoints == ()
        assert np.max(np.abs(sched.dense(1.0) - sched.dense(99.0))) == 0.0

    def test_two_segments(self, two_transmon_device):
        sched = cphase_schedule(two_transmon_device, 0.064, 60.0, 100.0, d_each=8)
        assert sched.breakpoints == (60.0,)
        perm = chain_encoding_permutation(8, 2, GRAY)
        idle = permute_to_encoded(
            build_chain_hamiltonian(two_transmon_device, 8).astype(complex), perm
        )
        inter = permute_to_encoded(
            build_chain_hamiltonian(two_transmon_device.with_flux(0, 0.064), 8).astype(complex),
            perm,
        )
        assert np.max(np.abs(sched.dense(10.0) - inter)) < 1e-12
        assert np.max(np.abs(sched.dense(80.0) - idle)) < 1e-12

    def test_skeleton_matches_dense(self, two_transmon_device):
        sched = cphase_schedule(two_transmon_device, 0.064, 60.0, 100.0, d_each=8)
        for t in (5.0, 59.0, 61.0, 95.0):
            assert np.max(np.abs(skeleton_matrix(sched, t) - sched.dense(t))) < 1e-11

    def test_requires_two_transmons(self, single_transmon):
        from transmonsim.device import ChainSpec
        from transmonsim.errors import ModelError

        with pytest.raises(ModelError):
            cphase_schedule(ChainSpec((single_transmon,)), 0.05, 10.0, d_each=8)


class TestEncodedChain:
    @pytest.mark.parametrize("scheme", [GRAY, STANDARD_BINARY])
    def test_encoded_chain_matches_dense(self, two_transmon_device, scheme):
        for d in (4, 8):
            encoded = encode_chain_hamiltonian(two_transmon_device, d, scheme)
            perm = chain_encoding_permutation(d, 2, scheme)
            dense = permute_to_encoded(
                build_chain_hamiltonian(two_transmon_device, d).astype(complex), perm
            )
            assert np.max(np.abs(matrix_of(encoded) - dense)) < 1e-11

    def test_three_site_chain_encoding(self):
        from transmonsim.device import ChainSpec, TransmonSpec

        chain = ChainSpec(
            (
                TransmonSpec(20.0, 91.0, 0.0),
                TransmonSpec(21.0, 91.0, 0.02),
                TransmonSpec(19.0, 91.0, 0.0),
            ),
            (0.5, 0.4),
            extra_capacitances_ff=((0, 2, 0.05),),
        )
        encoded = encode_chain_hamiltonian(chain, 4, GRAY)
        perm = chain_encoding_permutation(4, 3, GRAY)
        dense = permute_to_encoded(build_chain_hamiltonian(chain, 4).astype(complex), perm)
        assert np.max(np.abs(matrix_of(encoded) - dense)) < 1e-11

    def test_constant_schedule_round_trip(self, single_transmon):
        h = build_single_hamiltonian(single_transmon, 8)
        sched = constant_schedule(h, 8, 10.0)
        assert np.max(np.abs(skeleton_matrix(sched, 5.0) - sched.dense(5.0))) < 1e-12
