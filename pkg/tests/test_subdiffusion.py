"""The time-changed process, its functionals, and the measure-change weight."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiff.bernstein import Stable, TemperedStable
from subdiff.errors import DomainError, PreconditionError
from subdiff.laplace import renewal_function
from subdiff.analytics import laplace_S_at, fk_quadrature
from subdiff.seeding import substream
from subdiff.subdiffusion import (
    DiffusionSpec,
    IncrementSeries,
    fk_ensemble,
    girsanov_weight,
    increment_ensemble,
    increments_sequence,
    sample_fk_functional,
    sample_X_path,
    x_ensemble,
)
from subdiff.subordinator_sim import PathGrid


def unit_bm():
    return DiffusionSpec(drift_fn=lambda x: 0.0, vol_fn=lambda x: 1.0, x0=0.0)


class TestXPath:
    def test_flat_periods_freeze_x(self, stable_half):
        x_path, s_path = sample_X_path(
            stable_half, np.linspace(0.1, 2.0, 40), substream(1, 0), return_clock=True
        )
        ds = np.diff(s_path.values)
        dx = np.diff(x_path.values)
        flat = ds == 0.0
        assert flat.any()
        assert np.all(dx[flat] == 0.0)

    def test_second_moment_matches_renewal(self, stable_half):
        X, _ = x_ensemble(stable_half, [1.0], 40_000, 1e-3, 42)
        x1 = X[:, 0]
        se = (x1**2).std(ddof=1) / math.sqrt(x1.size)
        target = renewal_function(stable_half, 1.0)
        assert abs((x1**2).mean() - target) < 3.0 * se + 1e-3

    def test_mean_zero(self, stable_half):
        X, _ = x_ensemble(stable_half, [1.0], 40_000, 1e-3, 43)
        x1 = X[:, 0]
        se = x1.std(ddof=1) / math.sqrt(x1.size)
        assert abs(x1.mean()) < 3.0 * se

    def test_exponential_martingale(self, tempered_half):
        X, S = x_ensemble(tempered_half, [0.5, 1.0, 2.0], 40_000, 1e-3, 44)
        for j in range(3):
            e = np.exp(X[:, j] - 0.5 * S[:, j])
            se = e.std(ddof=1) / math.sqrt(e.size)
            assert abs(e.mean() - 1.0) < 3.0 * se + 2e-3

    def test_quadratic_variation_refines_to_clock(self, stable_half):
        # QV over a 4x coarser partition of the same path is farther from
        # S(t) than the fine partition's, for most paths
        t_grid = np.linspace(0.0, 1.0, 257)
        improvements = []
        for i in range(100):
            x_path, s_path = sample_X_path(
                stable_half, t_grid[1:], substream(808, i), dtau=1e-3, return_clock=True
            )
            x = np.concatenate(([0.0], x_path.values))
            s_end = s_path.values[-1]
            qv_fine = float(np.sum(np.diff(x) ** 2))
            qv_coarse = float(np.sum(np.diff(x[::4]) ** 2))
            improvements.append(abs(qv_coarse - s_end) - abs(qv_fine - s_end))
        assert np.median(improvements) > 0.0


class TestIncrements:
    def test_series_shape_and_finiteness(self, tempered_half):
        series = increments_sequence(tempered_half, 5, substream(2, 0))
        assert series.values.shape == (5,)
        assert np.all(np.isfinite(series.values))
        assert series.t0_draw >= 0.0

    def test_single_step_series(self, tempered_half):
        series = increments_sequence(tempered_half, 1, substream(3, 0))
        assert series.values.shape == (1,)

    def test_mean_zero_and_variance_stationary(self, tempered_half):
        Y, dS = increment_ensemble(tempered_half, 51, 8000, 1e-2, 909)
        for n in (0, 10, 50):
            col = Y[:, n]
            se = col.std(ddof=1) / math.sqrt(col.size)
            assert abs(col.mean()) < 3.0 * se
            sq = col**2
            se2 = sq.std(ddof=1) / math.sqrt(sq.size)
            # E Y(n)^2 = E dS~(n) = 1/mu = 2
            assert abs(sq.mean() - 2.0) < 3.0 * se2 + 2e-2, f"lag {n}"

    def test_empty_series_rejected(self, tempered_half, rng):
        with pytest.raises(DomainError):
            increments_sequence(tempered_half, 0, rng)

    def test_invalid_values_rejected(self, tempered_half):
        with pytest.raises(PreconditionError):
            IncrementSeries(values=np.array([1.0, np.nan]), spec=tempered_half)


class TestFeynmanKac:
    def test_trivial_functional_is_exactly_one(self, stable_half):
        v = sample_fk_functional(
            unit_bm(), lambda x: 0.0, lambda x: 1.0, stable_half, 1.0, 1e-2, substream(4, 0)
        )
        assert v == 1.0

    def test_constant_rate_matches_exponential_moment(self, stable_half):
        # h = c, g = 1: the functional is exp(-c S(t)) in distribution
        draws = fk_ensemble(
            unit_bm(), lambda x: 1.0, lambda x: 1.0, stable_half, 1.0, 1e-3,
            20_000, 2024, dtau=1e-3,
        )
        target = laplace_S_at(stable_half, -1.0, 1.0)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - target) < 3.0 * se + 2e-3

    def test_cosine_payoff_matches_quadrature(self, stable_half):
        draws = fk_ensemble(
            unit_bm(), lambda x: 0.0, lambda x: math.cos(x), stable_half, 1.0, 1e-3,
            20_000, 2025, dtau=1e-3,
        )
        target = fk_quadrature(stable_half, 0.0, np.cos, 0.0, 1.0)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - target) < 3.0 * se + 2e-3

    def test_bad_steps_rejected(self, stable_half, rng):
        with pytest.raises(DomainError):
            sample_fk_functional(
                unit_bm(), lambda x: 0.0, lambda x: 1.0, stable_half, 1.0, 0.0, rng
            )


class TestGirsanovWeight:
    def grid_paths(self, x_t, s_t):
        grid = np.array([0.5, 1.0])
        X = PathGrid(grid=grid, values=np.array([0.0, x_t]), monotone=False, clock="t")
        S = PathGrid(grid=grid, values=np.array([0.0, s_t]), clock="t")
        return X, S

    def test_degenerate_weight(self):
        X, S = self.grid_paths(0.0, 0.0)
        assert girsanov_weight(X, S, 0.5, 1.0) == 1.0

    def test_formula(self):
        X, S = self.grid_paths(2.0, 4.0)
        assert girsanov_weight(X, S, 0.0, 1.0) == pytest.approx(math.exp(-1.5), rel=1e-12)

    def test_grid_mismatch_rejected(self):
        X, _ = self.grid_paths(1.0, 1.0)
        S = PathGrid(grid=np.array([0.25, 1.0]), values=np.array([0.0, 1.0]), clock="t")
        with pytest.raises(PreconditionError):
            girsanov_weight(X, S, 0.0, 1.0)

    def test_off_grid_time_rejected(self):
        X, S = self.grid_paths(1.0, 1.0)
        with pytest.raises(PreconditionError):
            girsanov_weight(X, S, 0.0, 0.7)

    @given(x=st.floats(-3, 3), s=st.floats(0, 5), eps=st.floats(0, 2))
    @settings(max_examples=50, deadline=None)
    def test_always_positive(self, x, s, eps):
        X, S = self.grid_paths(x, s)
        assert girsanov_weight(X, S, eps, 1.0) > 0.0

    def test_weighted_exponential_constant_over_time(self, stable_half):
        # importance-sampling restatement: the weighted mean of exp(X(t))
        # is flat in t under the tilted measure
        T = 1.0
        grid = [0.25, 0.5, 1.0]
        X, S = x_ensemble(stable_half, grid, 30_000, 1e-3, 77)
        w = np.exp(-0.5 * X[:, 2] - (0.01 + 0.125) * S[:, 2])
        w_bar = w.mean()
        m = [(w * np.exp(X[:, j])).mean() / w_bar for j in range(3)]
        for i in range(2):
            a_i = w * np.exp(X[:, i + 1]) - w * np.exp(X[:, i])
            diff = m[i + 1] - m[i]
            resid = a_i - diff * w
            se = math.sqrt(np.mean(resid**2) / w.size) / w_bar
            assert abs(diff) < 3.0 * se + 5e-3
