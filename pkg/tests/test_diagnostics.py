import json

import numpy as np
import pytest

from selfattract import (ParticleMeasure, Schedule, SimConfig,
                         counterexample_system, gaussian_density,
                         quadratic_symmetric, simulate, simulate_ensemble)
from selfattract.diagnostics import (center_convergence, ergodicity_check,
                                     one_step_error)
from conftest import make_rng


@pytest.fixture(scope="module")
def medium_record():
    quad = quadratic_symmetric(1.0)
    cfg = SimConfig(dt=0.01, t_end=320.0, t_start=1.0, seed=6)
    return simulate(quad, 0.0, cfg)


class TestOneStepError:
    def test_series_positive_and_slope_negative(self, quad, medium_record):
        sched = Schedule(n_start=10, n_end=45)
        report = one_step_error(quad, medium_record, sched)
        errors = [v for _, _, v in report.series]
        assert all(e > 0 for e in errors)
        fit = dict(zip(("slope", "intercept"),
                       (report.fits[0][1]["slope"], report.fits[0][1]["intercept"])))
        assert fit["slope"] < 0
        assert report.passed

    def test_stationary_frozen_windows_sit_at_monte_carlo_floor(self, quad):
        # pre-history drawn from the fixed point, so every window samples the
        # stationary law; errors sit at the ergodic-average scale and shrink
        # with the window length roughly like its inverse square root
        gen = make_rng(44)
        warm = ParticleMeasure(gen.standard_normal(20_000), np.full(20_000, 5e-5))
        cfg = SimConfig(dt=0.01, t_end=1700.0, t_start=200.0, seed=9)
        rec = simulate(quad, 0.0, cfg, initial_occupation=warm)
        sched = Schedule(n_start=35, n_end=140)
        report = one_step_error(quad, rec, sched)
        errors = np.array([v for _, _, v in report.series])
        assert errors.max() < 5.0
        assert -1.3 < report.fits[0][1]["slope"] < 0.1

    def test_requires_coverage(self, quad, medium_record):
        with pytest.raises(Exception):
            one_step_error(quad, medium_record, Schedule(n_start=10, n_end=200))


class TestCenterConvergence:
    def test_noiseless_symmetric_start_keeps_center_fixed(self, quad):
        cfg = SimConfig(dt=0.005, t_end=70.0, t_start=1.0, seed=1, noise_scale=0.0)
        rec = simulate(quad, 0.0, cfg)
        report = center_convergence(rec, Schedule(n_start=1, n_end=17))
        partial = [v for label, _, v in report.series if label == "partial_sum"]
        assert partial[-1] <= 1e-10

    def test_attracting_run_flattens(self, quad, medium_record):
        report = center_convergence(medium_record, Schedule(n_start=4, n_end=46))
        assert report.passed

    def test_counterexample_partial_sums_grow_like_log_t(self):
        # negative control: the shifted potential keeps pushing the center
        ts, _, cs = counterexample_system(2.2e4, 0.01, seed=5)
        knots = np.array([n ** 1.5 for n in range(4, 80)])
        idx = np.searchsorted(ts, knots)
        partial = np.cumsum(np.abs(np.diff(cs[idx])))
        # compare against log growth of the knot times
        ratio = partial / np.log(knots[1:])
        assert partial[-1] > 2.0
        assert ratio[-1] == pytest.approx(ratio[ratio.size // 2], rel=0.35)


class TestErgodicity:
    def test_replicas_converge_and_fit_positive(self, quad):
        cfg = SimConfig(dt=0.01, t_end=420.0, t_start=1.0, seed=3)
        records = simulate_ensemble(quad, 0.0, cfg, 4)
        rho = gaussian_density(0, 1, -8, 8, 1024)
        report = ergodicity_check(quad, records, rho, final_w2_bound=0.25,
                                  min_passing=3)
        assert report.passed
        fit = report.fits[0][1]
        assert fit["a"] > 0 and fit["ci_low"] > 0

    def test_warm_start_stays_at_floor(self, quad):
        gen = make_rng(12)
        warm = ParticleMeasure(gen.standard_normal(50_000), np.full(50_000, 1.0))
        cfg = SimConfig(dt=0.01, t_end=150.0, t_start=100.0, seed=21)
        records = simulate_ensemble(quad, 0.0, cfg, 2, initial_occupation=warm)
        rho = gaussian_density(0, 1, -8, 8, 1024)
        report = ergodicity_check(quad, records, rho, final_w2_bound=0.1,
                                  min_passing=2, n_boot=50)
        dists = [v for label, _, v in report.series if label.startswith("w2")]
        assert max(dists) < 0.05

    def test_report_is_reproducible(self, quad):
        cfg = SimConfig(dt=0.01, t_end=60.0, t_start=1.0, seed=14)
        records = simulate_ensemble(quad, 0.0, cfg, 2)
        rho = gaussian_density(0, 1, -8, 8, 512)
        r1 = ergodicity_check(quad, records, rho, n_boot=40)
        r2 = ergodicity_check(quad, records, rho, n_boot=40)
        assert r1.to_jsonl() == r2.to_jsonl()


def test_report_jsonl_round_trips(quad, medium_record):
    report = center_convergence(medium_record, Schedule(n_start=4, n_end=20))
    lines = report.to_jsonl().strip().splitlines()
    parsed = [json.loads(line) for line in lines]
    assert parsed[0] == {"experiment": "center-convergence"}
    assert any("criterion" in p for p in parsed)
    assert "PASS" in report.summary() or "FAIL" in report.summary()
