import numpy as np
import pytest

from selfattract import (InvalidInputError, RateParams, Schedule, dirac,
                         envelope_compare, euler_step, gaussian_density,
                         quadratic_symmetric, run_flow, schedule_times, smooth,
                         solve_fixed_point, tp_distance_1d, uniform_density)
from selfattract.flow import initial_state, tail_certificate_track
from selfattract.energy import free_energy


class TestSchedule:
    def test_exact_powers(self):
        s = Schedule(n_end=10)
        times = dict((n, t) for (t, _), n in zip(schedule_times(s), s.indices()))
        assert times[4] == 8.0
        assert times[1] == 1.0

    def test_interval_scaling(self):
        s = Schedule(n_end=101)
        pairs = schedule_times(s)
        t100, dt100 = pairs[-1]
        assert t100 == pytest.approx(100.0 ** 1.5)
        assert dt100 / 100.0 ** 0.5 == pytest.approx(1.5, rel=0.02)

    def test_strictly_increasing(self):
        s = Schedule(n_end=40)
        ts = [t for t, _ in schedule_times(s)]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert all(dt > 0 for _, dt in schedule_times(s))

    def test_rejects_bad_range(self):
        with pytest.raises(InvalidInputError):
            Schedule(n_end=1)


@pytest.fixture(scope="module")
def rho_quad():
    return solve_fixed_point(quadratic_symmetric(1.0), uniform_density(-8, 8, 1024),
                             tol=1e-13)


class TestEulerStep:
    @pytest.mark.parametrize("n", [1, 10, 60])
    def test_fixed_point_is_invariant_at_any_mixing_weight(self, quad, rho_quad, n):
        s = Schedule(n_start=n, n_end=n + 2)
        ref = free_energy(quad, rho_quad).total
        state = initial_state(quad, rho_quad, s, reference_total=ref)
        nxt = euler_step(quad, state, s.time(n + 1), reference_total=ref)
        assert tp_distance_1d(quad, nxt.density, rho_quad).value <= 1e-8
        assert nxt.free_energy.relative <= 1e-10

    def test_mass_preserved(self, quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        s = Schedule(n_end=5)
        state = initial_state(quad, init, s, reference_total=0.0)
        nxt = euler_step(quad, state, s.time(2), reference_total=0.0)
        assert nxt.density.mass == pytest.approx(1.0, abs=1e-9)

    def test_rejects_non_increasing_time(self, quad, rho_quad):
        s = Schedule(n_end=5)
        state = initial_state(quad, rho_quad, s, reference_total=0.0)
        with pytest.raises(InvalidInputError):
            euler_step(quad, state, state.time)

    def test_energy_decreases_from_smoothed_atom(self, quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=40))
        rel = np.array([st.free_energy.relative for st in states])
        assert np.all(np.diff(rel) <= 1e-8)


class TestRunFlow:
    def test_start_at_fixed_point_stays_there(self, quad, rho_quad):
        states = run_flow(quad, rho_quad, Schedule(n_end=12), rho_inf=rho_quad)
        for st in states:
            assert tp_distance_1d(quad, st.density, rho_quad).value <= 1e-7

    def test_smoothed_atom_approaches_gaussian(self, quad, rho_quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=120), rho_inf=rho_quad)
        final = states[-1]
        from selfattract import recenter

        centered = recenter(final.density, final.center)
        target = gaussian_density(0, 1, float(centered.lo[0]),
                                  float(centered.hi[0]), 1024)
        assert tp_distance_1d(quad, centered, target).value <= 2e-3

    def test_center_increments_flatten(self, quad):
        init = smooth(dirac(0.4), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=80))
        inc = np.abs(np.diff([st.center for st in states]))
        first_half = inc[: inc.size // 2].sum()
        second_half = inc[inc.size // 2:].sum()
        assert second_half <= 0.2 * first_half + 1e-12

    def test_tail_certificates_stay_bounded(self, quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=50))
        track = tail_certificate_track(quad, states)
        assert np.all(np.isfinite(track))
        assert track.max() <= 2.0 * track[0]


class TestEnvelopeCompare:
    def test_flat_zero_trace_fully_satisfied(self, quad, rho_quad):
        states = run_flow(quad, rho_quad, Schedule(n_end=10), rho_inf=rho_quad)
        report = envelope_compare(states, RateParams())
        assert report["fraction_satisfied"] == 1.0

    def test_huge_rate_constant_dominates(self, quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=40))
        report = envelope_compare(states, RateParams(c7=1e-6))
        assert report["fraction_satisfied"] == 1.0

    def test_decay_exponent_positive_on_contracting_run(self, quad):
        init = smooth(dirac(0.0), 0.5, lo=-8, hi=8, cells=1024)
        states = run_flow(quad, init, Schedule(n_end=60))
        report = envelope_compare(states, RateParams())
        assert report["decay_exponent"] > 0
