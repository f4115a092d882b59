"""The verification suite itself: level on real ensembles, power on
constructed counterexamples, and auditability of the reports."""

import math

import numpy as np
import pytest

from subdiff.bernstein import Stable, TemperedStable
from subdiff.diagnostics import (
    EstimateWithCI,
    TestReport,
    recheck,
    run_lil_test,
    run_lln_test,
    run_martingale_suite,
    run_measure_change_test,
    run_mixing_test,
    run_msd_test,
)
from subdiff.errors import ConfigError, DomainError, PreconditionError


class TestEstimateWithCI:
    def test_from_samples(self, rng):
        x = rng.standard_normal(1000)
        est = EstimateWithCI.from_samples(x)
        assert est.n == 1000
        assert est.stderr == pytest.approx(x.std(ddof=1) / math.sqrt(1000))

    def test_too_few_samples(self):
        with pytest.raises(DomainError):
            EstimateWithCI(mean=0.0, stderr=1.0, n=1)

    def test_bad_level(self):
        with pytest.raises(DomainError):
            EstimateWithCI(mean=0.0, stderr=1.0, n=10, level=1.5)


class TestMartingaleSuite:
    def test_passes_on_tempered(self, tempered_half):
        rep = run_martingale_suite(tempered_half, 15_000, [0.5, 1.0], seed=11)
        assert rep.passed
        assert recheck(rep)

    def test_plain_bm_injection_passes(self, rng):
        # S(t) = t turns the process into Brownian motion
        times = [0.5, 1.0]
        n = 20_000
        S = np.tile(np.asarray(times), (n, 1))
        X = np.cumsum(
            np.sqrt(np.diff(np.concatenate((np.zeros((n, 1)), S), axis=1)))
            * rng.standard_normal((n, 2)),
            axis=1,
        )
        rep = run_martingale_suite(Stable(0.5), n, times, seed=1, paths=(X, S))
        assert rep.passed

    def test_drift_counterexample_fails(self, tempered_half):
        times = [0.5, 1.0]
        n = 4000
        X = np.tile(np.asarray(times), (n, 1))
        rep = run_martingale_suite(tempered_half, n, times, seed=1, paths=(X, X.copy()))
        assert not rep.passed

    def test_requires_two_times(self, tempered_half):
        with pytest.raises(PreconditionError):
            run_martingale_suite(tempered_half, 100, [1.0], seed=0)


class TestMeasureChange:
    def test_passes_on_stable(self, stable_half):
        rep = run_measure_change_test(
            stable_half, 20_000, 0.01, 1.0, [0.25, 0.5, 1.0], seed=12
        )
        assert rep.passed
        assert recheck(rep)

    def test_large_tilt_still_constant(self, stable_half):
        rep = run_measure_change_test(
            stable_half, 20_000, 10.0, 1.0, [0.25, 0.5, 1.0], seed=13
        )
        assert rep.passed

    def test_unit_weight_control_fails(self, stable_half):
        rep = run_measure_change_test(
            stable_half, 20_000, 0.01, 1.0, [0.25, 0.5, 1.0], seed=12, unit_weights=True
        )
        assert not rep.passed

    def test_singleton_checkpoint_trivially_passes(self, stable_half):
        rep = run_measure_change_test(stable_half, 2_000, 0.01, 1.0, [1.0], seed=14)
        assert rep.passed

    def test_ess_floor_marks_inconclusive(self, stable_half):
        rep = run_measure_change_test(
            stable_half, 300, 0.01, 1.0, [0.5, 1.0], seed=15, ess_floor=1e9
        )
        assert rep.inconclusive and not rep.passed


class TestLln:
    def test_passes(self, stable_half):
        rep = run_lln_test(stable_half, 2_000, (1e2, 1e3, 1e4), seed=16, dtau=2e-2)
        assert rep.passed
        assert recheck(rep)

    def test_linear_drift_counterexample_fails(self, stable_half):
        t_list = (1e2, 1e3, 1e4)
        X = np.tile(np.asarray(t_list), (500, 1))
        rep = run_lln_test(stable_half, 500, t_list, seed=1, paths=X)
        assert not rep.passed

    def test_singleton_time_degenerates_to_ci_check(self, stable_half):
        rep = run_lln_test(stable_half, 1_000, (1e2,), seed=17, dtau=2e-2)
        assert rep.passed


class TestLil:
    def test_passes_and_controls_fail(self, stable_half):
        common = dict(n_paths=250, horizon=1e6, seed=18, dtau=2e-2)
        assert run_lil_test(stable_half, **common).passed
        assert not run_lil_test(stable_half, envelope="linear", **common).passed
        assert not run_lil_test(stable_half, envelope="constant", **common).passed

    def test_report_rechecks(self, stable_half):
        rep = run_lil_test(stable_half, 150, horizon=1e6, seed=19, dtau=3e-2)
        assert recheck(rep) == rep.passed


class TestMsd:
    def test_passes_with_crossover(self, tempered_half):
        rep = run_msd_test(
            tempered_half, 15_000, [0.5, 1.0, 2.0], seed=20, crossover_time=1e3
        )
        assert rep.passed
        assert recheck(rep)

    def test_small_time_second_moment_shrinks(self, tempered_half):
        rep = run_msd_test(tempered_half, 5_000, [0.01, 0.1], seed=21, dtau=1e-4)
        assert rep.passed
        first = [s for s in rep.statistics if s["kind"] == "abs_le"]
        assert first[0]["target"] < first[1]["target"]

    def test_infinite_mean_crossover_rejected(self, stable_half):
        with pytest.raises(PreconditionError):
            run_msd_test(stable_half, 100, [0.5], seed=0, crossover_time=10.0)


class TestMixing:
    def test_passes_with_both_routes(self, tempered_half):
        rep = run_mixing_test(tempered_half, 1200, 128, seed=22, dtau=1e-2)
        assert rep.passed
        assert recheck(rep)
        labels = {s["label"] for s in rep.statistics}
        assert any(l.startswith("laplace_factorization") for l in labels)
        assert any(l.startswith("joint_recursion") for l in labels)

    def test_iid_series_pass(self, tempered_half, rng):
        series = rng.standard_normal((1500, 128))
        rep = run_mixing_test(tempered_half, 1500, 128, seed=23, series=series)
        assert rep.passed
        assert "injected series: Laplace-domain route skipped" in rep.notes

    def test_perfectly_dependent_series_fail(self, tempered_half, rng):
        series = np.tile(rng.standard_normal((1500, 1)), (1, 128))
        rep = run_mixing_test(tempered_half, 1500, 128, seed=24, series=series)
        assert not rep.passed

    def test_too_few_series_rejected(self, tempered_half):
        with pytest.raises(ConfigError):
            run_mixing_test(tempered_half, 50, 128, seed=0)

    def test_bad_lags_rejected(self, tempered_half):
        with pytest.raises(PreconditionError):
            run_mixing_test(tempered_half, 1000, 16, lags=(1, 16), seed=0)


class TestReportContract:
    def test_reports_are_deterministic(self, tempered_half):
        a = run_msd_test(tempered_half, 2_000, [0.5, 1.0], seed=30, dtau=5e-3)
        b = run_msd_test(tempered_half, 2_000, [0.5, 1.0], seed=30, dtau=5e-3)
        assert a.as_dict() == b.as_dict()

    def test_runtime_not_in_serialized_form(self, tempered_half):
        rep = run_msd_test(tempered_half, 2_000, [0.5], seed=31, dtau=5e-3)
        assert rep.runtime > 0.0
        assert "runtime" not in rep.as_dict()

    def test_recheck_flags_tampering(self, tempered_half):
        rep = run_msd_test(tempered_half, 2_000, [0.5], seed=32, dtau=5e-3)
        rep.statistics[0]["ok"] = not rep.statistics[0]["ok"]
        with pytest.raises(ConfigError):
            recheck(rep)
