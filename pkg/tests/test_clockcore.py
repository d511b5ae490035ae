"""Clock states, their error measures, and the analytic envelope."""

import math

import numpy as np
import pytest

from relclock import (
    BoundParams,
    ClockModel,
    QuasiIdealParams,
    analytic_bound,
    clock_hamiltonian,
    commutator_error,
    energy_to_time,
    evolution_error,
    evolve_clock,
    generator_error,
    qic_derivative,
    qic_overlap,
    qic_shift,
    qic_state,
    time_operator,
    time_state,
    time_to_energy,
)
from relclock import _precise
from relclock.kernels import window_amplitudes

from conftest import random_state


def centered(d, sigma=None):
    if sigma is None:
        sigma = math.sqrt(d)
    return QuasiIdealParams(k0=d / 2, sigma=sigma, j0=(d - 1) / 2)


class TestClockModel:
    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError):
            ClockModel(d=1)

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError):
            ClockModel(d=4, omega=0.0)

    def test_rejects_inconsistent_period(self):
        with pytest.raises(ValueError):
            ClockModel(d=4, omega=2.0, period=7.0)

    def test_accepts_consistent_period(self):
        clock = ClockModel(d=4, omega=2.0, period=math.pi)
        assert clock.tick == pytest.approx(math.pi / 4, rel=1e-15)

    def test_tick_spans_period(self):
        for d in (2, 8, 64):
            clock = ClockModel(d=d, omega=1.0)
            assert clock.tick * d == pytest.approx(clock.period, rel=1e-15)


class TestTimeBasis:
    def test_one_tick_advances_the_label(self):
        # exact covariance of the discrete basis under its own clock
        for d in range(2, 65):
            clock = ClockModel(d=d, omega=1.0)
            for k in (0, d // 2, d - 1):
                stepped = evolve_clock(clock, time_state(clock, k), clock.tick)
                defect = np.linalg.norm(stepped - time_state(clock, k + 1))
                assert defect <= 1e-12

    def test_full_period_recurrence(self):
        for d in (2, 8, 33, 64):
            clock = ClockModel(d=d, omega=1.0)
            psi = time_state(clock, 1)
            back = evolve_clock(clock, psi, clock.period)
            assert np.linalg.norm(back - psi) <= 1e-12

    def test_transform_round_trip(self, rng):
        for d in (2, 8, 64, 256):
            clock = ClockModel(d=d, omega=1.0)
            v = random_state(rng, d)
            w = time_to_energy(clock, v)
            assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.norm(energy_to_time(clock, w) - v) <= 1e-12

    def test_time_operator_spectrum(self):
        clock = ClockModel(d=8, omega=1.0)
        top = time_operator(clock)
        assert np.linalg.norm(top - top.conj().T) <= 1e-12
        vals = np.linalg.eigvalsh(top)
        assert np.allclose(np.sort(vals), clock.tick * np.arange(8), atol=1e-12)

    def test_time_operator_expectation_on_labels(self):
        clock = ClockModel(d=8, omega=1.0)
        top = time_operator(clock)
        for k in (0, 3, 7):
            psi = time_state(clock, k)
            val = np.vdot(psi, top @ psi)
            assert val == pytest.approx(clock.tick * k, abs=1e-12)

    def test_clock_hamiltonian_is_the_ladder(self):
        clock = ClockModel(d=5, omega=0.7)
        h = clock_hamiltonian(clock)
        assert np.allclose(h, np.diag(0.7 * np.arange(5)), atol=0)


class TestQuasiIdealState:
    def test_unit_norm(self):
        for d, sigma, j0, k0 in [
            (8, math.sqrt(8), 3.5, 4.0),
            (16, 2.0, 5.0, 7.3),
            (32, math.sqrt(32), 10.2, 16.0),
        ]:
            clock = ClockModel(d=d, omega=1.0)
            st = qic_state(clock, QuasiIdealParams(k0=k0, sigma=sigma, j0=j0))
            assert np.linalg.norm(st.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            QuasiIdealParams(k0=0.0, sigma=0.0, j0=1.0)

    def test_rejects_sigma_at_dimension(self):
        clock = ClockModel(d=8, omega=1.0)
        with pytest.raises(ValueError):
            qic_state(clock, QuasiIdealParams(k0=4.0, sigma=8.0, j0=3.5))

    def test_rejects_edge_j0(self):
        clock = ClockModel(d=8, omega=1.0)
        for j0 in (0.0, 7.0, -1.0):
            with pytest.raises(ValueError):
                qic_state(clock, QuasiIdealParams(k0=4.0, sigma=2.0, j0=j0))

    def test_underflowed_window_raises_arithmetic_error(self):
        # all window cells vanish when sigma is tiny and k0 is off-lattice,
        # which must surface as a loud failure, not silent nan amplitudes
        clock = ClockModel(d=8, omega=1.0)
        params = QuasiIdealParams(k0=0.5, sigma=0.01, j0=3.5)
        with np.errstate(invalid="ignore", divide="ignore"):
            with pytest.raises(ArithmeticError):
                qic_state(clock, params)

    def test_window_labels(self):
        params = QuasiIdealParams(k0=4.5, sigma=2.0, j0=3.5)
        assert list(params.window(8)) == [1, 2, 3, 4, 5, 6, 7, 8]


class TestOverlap:
    def test_equal_times_give_unity(self):
        clock = ClockModel(d=16, omega=1.0)
        params = centered(16)
        for tau in (8.0, 3.3, 11.75):
            assert qic_overlap(clock, params, tau, tau) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_conjugate_symmetry(self):
        clock = ClockModel(d=16, omega=1.0)
        params = centered(16)
        a = qic_overlap(clock, params, 6.2, 9.1)
        b = qic_overlap(clock, params, 9.1, 6.2)
        assert a == pytest.approx(np.conj(b), abs=1e-12)

    def test_magnitude_decreases_with_separation(self):
        clock = ClockModel(d=32, omega=1.0)
        params = centered(32)
        seps = np.linspace(0.0, params.sigma, 8)
        mags = [abs(qic_overlap(clock, params, 16.0, 16.0 + s)) for s in seps]
        assert all(a > b for a, b in zip(mags, mags[1:]))

    def test_narrower_state_decorrelates_faster(self):
        clock = ClockModel(d=32, omega=1.0)
        wide = centered(32)
        narrow = centered(32, sigma=math.sqrt(32) / 2)
        ow = abs(qic_overlap(clock, wide, 16.0, 18.0))
        on = abs(qic_overlap(clock, narrow, 16.0, 18.0))
        assert on < ow


class TestDerivative:
    def test_matches_finite_differences(self):
        clock = ClockModel(d=16, omega=1.0)
        params = QuasiIdealParams(k0=8.25, sigma=4.0, j0=7.5)
        h = 1e-5
        fd = (
            window_amplitudes(16, 8.25 + h, 4.0, 7.5)
            - window_amplitudes(16, 8.25 - h, 4.0, 7.5)
        ) / (2 * h)
        deriv = qic_derivative(clock, params, 8.25)
        assert np.linalg.norm(deriv - fd) <= 1e-6

    def test_center_cell_is_a_pure_phase_rotation(self):
        # at the window center the envelope is flat, leaving only the
        # energy-offset rotation
        clock = ClockModel(d=16, omega=1.0)
        params = QuasiIdealParams(k0=8.0, sigma=4.0, j0=7.5)
        amps = qic_state(clock, params).amplitudes
        deriv = qic_derivative(clock, params, 8.0)
        ratio = deriv[8] / amps[8]
        assert ratio == pytest.approx(-2j * np.pi * 7.5 / 16, abs=1e-12)

    def test_envelope_part_scales_inverse_square_sigma(self):
        clock = ClockModel(d=16, omega=1.0)
        base = QuasiIdealParams(k0=8.0, sigma=2.0, j0=7.5)
        wide = QuasiIdealParams(k0=8.0, sigma=4.0, j0=7.5)
        rot = -2j * np.pi * 7.5 / 16

        def envelope_rate(params):
            amps = qic_state(clock, params).amplitudes
            deriv = qic_derivative(clock, params, 8.0)
            return (deriv[9] / amps[9] - rot).real

        assert envelope_rate(base) == pytest.approx(
            4.0 * envelope_rate(wide), rel=1e-12
        )

    def test_shift_difference_quotient_converges(self):
        clock = ClockModel(d=16, omega=1.0)
        params = QuasiIdealParams(k0=8.25, sigma=4.0, j0=7.5)
        amps = window_amplitudes(16, 8.25, 4.0, 7.5)
        deriv = qic_derivative(clock, params, 8.25)
        errs = []
        for delta in (2e-3, 1e-3):
            shifted = qic_shift(clock, params, delta * clock.tick).amplitudes
            errs.append(np.linalg.norm((shifted - amps) / delta - deriv))
        assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.3)


class TestLatticeShifts:
    def test_integer_shift_is_a_roll(self):
        clock = ClockModel(d=8, omega=1.0)
        params = QuasiIdealParams(k0=4.0, sigma=2.0, j0=3.5)
        amps = qic_state(clock, params).amplitudes
        for m in (1, 2, 5):
            rolled = np.roll(amps, m)
            shifted = qic_shift(clock, params, m * clock.tick).amplitudes
            assert np.linalg.norm(shifted - rolled) <= 1e-12

    def test_evolution_error_vanishes_on_the_lattice(self):
        clock = ClockModel(d=8, omega=1.0)
        params = centered(8)
        assert evolution_error(clock, params, clock.tick).numeric_norm <= 1e-13


class TestErrorMeasures:
    # canonical family: k0 = d/2, sigma = sqrt(d), centered j0; evolution
    # error at half a tick, generator error at the window center
    CANONICAL = {
        8: (
            0.0016264842860318227,
            0.004458997066352416,
            0.02621956786329315,
            0.029224206299877615,
        ),
        16: (
            2.5506237106484503e-06,
            7.524165169697415e-06,
            5.449959549500297e-05,
            9.956577448547136e-05,
        ),
        32: (
            7.433273755934388e-12,
            2.307067415156661e-11,
            2.1632381149368695e-10,
            6.171269883976494e-10,
        ),
    }

    def test_canonical_values(self):
        for d, (evol, prime, bound, comm) in self.CANONICAL.items():
            clock = ClockModel(d=d, omega=1.0)
            params = centered(d)
            tol = dict(rel=1e-9) if d < 32 else dict(rel=2e-4, abs=1e-15)
            got_evol = evolution_error(clock, params, 0.5 * clock.tick)
            assert got_evol.numeric_norm == pytest.approx(evol, **tol)
            gen = generator_error(clock, params, d / 2)
            assert gen.numeric_norm == pytest.approx(prime, **tol)
            assert gen.analytic_bound == pytest.approx(bound, rel=1e-9)
            got_comm = commutator_error(clock, params)
            assert got_comm.numeric_norm == pytest.approx(comm, **tol)

    def test_generator_error_below_its_bound(self):
        for d in (8, 16, 32):
            clock = ClockModel(d=d, omega=1.0)
            gen = generator_error(clock, centered(d), d / 2)
            assert gen.numeric_norm <= gen.analytic_bound

    def test_super_exponential_decay(self):
        for col in range(2):
            vals = [self.CANONICAL[d][col] for d in (8, 16, 32)]
            for big, small in zip(vals, vals[1:]):
                assert big / small > 100.0

    def test_off_center_j0_requires_alpha0_for_a_bound(self):
        clock = ClockModel(d=16, omega=1.0)
        params = QuasiIdealParams(k0=8.0, sigma=4.0, j0=5.0)
        assert generator_error(clock, params, 8.0).analytic_bound is None
        rep = generator_error(clock, params, 8.0, alpha0=0.6)
        assert rep.analytic_bound is not None and rep.analytic_bound > 0

    def test_generator_error_invariant_under_integer_recentering(self):
        # the folded lattice has no boundary, so shifting the window by
        # whole ticks cannot change the residual norm
        clock = ClockModel(d=8, omega=1.0)
        params = centered(8)
        a = generator_error(clock, params, 4.0).numeric_norm
        b = generator_error(clock, params, 7.0).numeric_norm
        assert abs(a - b) / a <= 1e-11

    def test_commutator_error_stable_under_recentering_off_center(self):
        clock = ClockModel(d=32, omega=1.0)
        expected = {
            16.0: 0.00020022163298574807,
            17.0: 0.00020104463614347855,
            18.0: 0.00020279331024877895,
        }
        vals = []
        for k0, ref in expected.items():
            params = QuasiIdealParams(k0=k0, sigma=math.sqrt(32), j0=10.2)
            val = commutator_error(clock, params).numeric_norm
            assert val == pytest.approx(ref, rel=1e-9)
            vals.append(val)
        assert (max(vals) - min(vals)) / min(vals) <= 0.05

    def test_commutator_error_hypersensitive_at_the_symmetric_point(self):
        # the centered configuration sits at a cancellation: a half-unit
        # j0 move costs a factor of several, unlike the generic case above
        clock = ClockModel(d=32, omega=1.0)
        cen = commutator_error(
            clock, QuasiIdealParams(k0=16.0, sigma=math.sqrt(32), j0=15.5)
        ).numeric_norm
        off = commutator_error(
            clock, QuasiIdealParams(k0=16.0, sigma=math.sqrt(32), j0=14.5)
        ).numeric_norm
        assert cen == pytest.approx(6.171269883976494e-10, rel=2e-4, abs=1e-15)
        assert off == pytest.approx(3.4687761188164784e-09, rel=2e-4, abs=1e-15)
        assert off / cen > 3.0

    def test_bare_time_state_fails_as_a_clock(self):
        # a single lattice state has order-one commutator residual where
        # the Gaussian state is at 1e-4; that gap is the whole point
        clock = ClockModel(d=16, omega=1.0)
        psi = time_state(clock, 3)
        hc = clock.omega * np.arange(16)
        top = time_operator(clock)
        comp = hc * (top @ psi) - top @ (hc * psi) + 1j * psi
        residual = float(np.linalg.norm(comp))
        assert residual == pytest.approx(6.455965451293064, rel=1e-9)
        assert residual > 1.0
        assert commutator_error(clock, centered(16)).numeric_norm < 1e-3


class TestHighPrecisionPath:
    def test_float64_agrees_where_it_can(self):
        assert _precise.evolution_error_norm(
            8, math.sqrt(8), 3.5, 4.0, 0.5
        ) == pytest.approx(0.0016264842860318227, rel=1e-10)
        assert _precise.generator_error_norm(
            8, math.sqrt(8), 3.5, 4.0
        ) == pytest.approx(0.004458997066352416, rel=1e-10)

    def test_d64_values_below_the_float64_floor(self):
        clock = ClockModel(d=64, omega=1.0)
        params = centered(64)
        # float64 bottoms out near 1e-15; the extended-precision path
        # resolves the true decay
        assert evolution_error(clock, params, 0.5 * clock.tick).numeric_norm < 1e-12
        assert _precise.evolution_error_norm(
            64, 8.0, 31.5, 32.0, 0.5
        ) == pytest.approx(7.550119963888683e-23, rel=1e-12)
        assert _precise.generator_error_norm(64, 8.0, 31.5, 32.0) == pytest.approx(
            2.427438557690777e-22, rel=1e-12
        )
        assert _precise.commutator_error_norm(
            64, 8.0, 31.5, 32.0, 1.0
        ) == pytest.approx(1.3114303055333146e-20, rel=1e-12)


class TestAnalyticBound:
    def test_rejects_alpha0_outside_unit_interval(self):
        for a0 in (0.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                BoundParams(alpha0=a0, sigma=2.0, d=8)

    def test_positive(self):
        for sigma in (1.0, math.sqrt(32), 5.0):
            assert analytic_bound(BoundParams(1.0, sigma, 32), 0.3) > 0

    def test_branches_agree_near_the_seam(self):
        clock = ClockModel(d=32, omega=1.0)
        st = qic_state(
            clock, QuasiIdealParams(k0=16.0, sigma=math.sqrt(32), j0=15.5)
        )
        peak = abs(st.amplitudes[16])
        dedicated = analytic_bound(BoundParams(1.0, math.sqrt(32), 32), peak)
        general = analytic_bound(
            BoundParams(1.0, math.sqrt(32) * (1 + 1e-9), 32), peak
        )
        assert dedicated == pytest.approx(2.1632381149368695e-10, rel=1e-9)
        assert general == pytest.approx(2.358470834111958e-10, rel=1e-9)
        ratio = dedicated / general
        assert ratio == pytest.approx(0.9172206345097331, rel=1e-9)
        assert 1 / 3 < ratio < 3

    def test_decays_faster_than_exponentially(self):
        bounds = [self_bound(d) for d in (8, 16, 32)]
        for big, small in zip(bounds, bounds[1:]):
            assert math.log(small / big) <= -1.0

    def test_survives_extreme_arguments(self):
        # the geometric-series guard keeps huge exponents from overflowing
        val = analytic_bound(BoundParams(1.0, 0.5, 2048), 1.0)
        assert np.isfinite(val) and val >= 0


def self_bound(d):
    clock = ClockModel(d=d, omega=1.0)
    return generator_error(clock, centered(d), d / 2).analytic_bound
