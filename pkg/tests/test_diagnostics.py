"""
Tests for the empirical process, standardizers and the uniformity check.
"""

import math

import numpy as np
import pytest
from scipy.stats import gumbel_r, norm

from src.diagnostics import (
    LOG_ROOT_TWO_PI,
    IntervalA2,
    LimitLaw,
    gumbel_standardize_lambda,
    gumbel_standardize_m,
    interval_a2,
    ks_to_limit,
    limit_cdf,
    normal_standardize_split,
    process_supremum,
    process_values,
    standardize,
    that_uniformity_report,
)
from src.error_handler import DegenerateSize, EmptyInterval, EmptySample, InvalidFraction
from src.likelihood import location_bound
from src.universal import asymptotic_lrt_threshold, asymptotic_slrt_threshold

LOG_LOG_1000 = math.log(math.log(1000))


class TestProcess:
    def test_vanishes_at_zero(self, null_values):
        assert process_values(null_values, [0.0])[0] == 0.0

    def test_matches_direct_formula(self):
        x = np.array([-1.0, 0.5, 2.0])
        t = 0.8
        direct = np.sum(np.exp(t * x - t * t / 2.0) - 1.0) * math.exp(-t * t / 2.0) / math.sqrt(3)
        assert process_values(x, [t])[0] == pytest.approx(direct, rel=1e-12)

    def test_zero_sample(self):
        curve = process_supremum(np.zeros(100))
        assert curve.m_n == 0.0
        assert curve.t_star == 0.0

    def test_single_observation_against_dense_grid(self):
        t = np.linspace(-3.0, 3.0, 600_001)
        oracle = float(process_values([2.0], t).max())
        curve = process_supremum([2.0])
        assert curve.m_n >= oracle - 1e-9
        assert curve.m_n == pytest.approx(oracle, abs=1e-6)
        assert curve.m_n > math.e - math.exp(-0.5)

    def test_sign_flip(self, rng):
        x = np.concatenate([rng.standard_normal(150), rng.normal(2.0, 1.0, 50)])
        curve = process_supremum(x)
        flipped = process_supremum(-x)
        assert flipped.m_n == pytest.approx(curve.m_n, abs=1e-9)
        assert flipped.t_star == pytest.approx(-curve.t_star, abs=1e-6)

    def test_curve_covers_search_range(self, null_values):
        curve = process_supremum(null_values)
        bound = location_bound(null_values)
        assert curve.t_grid[0] == pytest.approx(-bound)
        assert curve.t_grid[-1] == pytest.approx(bound)
        assert curve.m_n >= curve.s_values.max()
        assert abs(curve.t_star) <= bound

    def test_chunked_evaluation(self, null_values, monkeypatch):
        from src.config import Config

        grid = np.linspace(-3.0, 3.0, 31)
        expected = process_values(null_values, grid)
        monkeypatch.setattr(Config, "CHUNK_ELEMENTS", 3 * null_values.size)
        np.testing.assert_allclose(process_values(null_values, grid), expected, rtol=1e-13)

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            process_values([], [1.0])


class TestStandardizers:
    def test_gumbel_m_centering(self):
        root = math.sqrt(LOG_LOG_1000)
        assert gumbel_standardize_m(root, 1000) == pytest.approx(LOG_ROOT_TWO_PI, abs=1e-12)
        assert LOG_ROOT_TWO_PI == pytest.approx(1.491303, abs=1e-6)
        assert gumbel_standardize_m(0.0, 1000) == pytest.approx(LOG_ROOT_TWO_PI - LOG_LOG_1000)

    def test_lrt_threshold_maps_to_gumbel_quantile(self):
        for alpha in (0.01, 0.05, 0.1):
            x = gumbel_standardize_lambda(asymptotic_lrt_threshold(1000, alpha), 1000)
            assert x == pytest.approx(-2.0 * math.log(-math.log1p(-alpha)), abs=1e-9)
            assert limit_cdf(LimitLaw.LRT, x) == pytest.approx(1.0 - alpha, abs=1e-9)

    def test_slrt_threshold_maps_to_normal_quantile(self):
        for m0 in (0.4, 0.5, 0.6):
            x = normal_standardize_split(asymptotic_slrt_threshold(1000, 0.05, m0), 1000, m0)
            assert x == pytest.approx(norm.ppf(0.95), abs=1e-9)

    def test_split_at_zero(self):
        assert normal_standardize_split(0.0, 1000, 0.5) == pytest.approx(math.sqrt(LOG_LOG_1000) / 2.0)

    def test_dispatch(self):
        assert standardize("supremum", 2.0, 1000) == gumbel_standardize_m(2.0, 1000)
        assert standardize(LimitLaw.LRT, 3.0, 1000) == gumbel_standardize_lambda(3.0, 1000)
        assert standardize("slrt", -1.0, 1000, 0.4) == normal_standardize_split(-1.0, 1000, 0.4)
        with pytest.raises(InvalidFraction):
            standardize(LimitLaw.SLRT, 0.0, 1000)

    def test_small_n_is_refused(self):
        with pytest.raises(DegenerateSize):
            gumbel_standardize_m(1.0, 15)
        with pytest.raises(DegenerateSize):
            normal_standardize_split(1.0, 10, 0.5)


class TestLimitLaws:
    def test_cdf_values(self):
        assert limit_cdf(LimitLaw.SUPREMUM, 0.0) == pytest.approx(math.exp(-1.0))
        assert limit_cdf(LimitLaw.LRT, 0.0) == pytest.approx(math.exp(-1.0))
        assert limit_cdf(LimitLaw.LRT, 2.0) == pytest.approx(limit_cdf(LimitLaw.SUPREMUM, 1.0))
        assert limit_cdf(LimitLaw.SLRT, 0.0) == 0.5

    def test_cdf_is_vectorized(self):
        values = limit_cdf(LimitLaw.SLRT, np.array([-1.0, 0.0, 1.0]))
        assert isinstance(values, np.ndarray)
        np.testing.assert_allclose(values, norm.cdf([-1.0, 0.0, 1.0]))

    def test_ks_small_for_draws_from_the_limit(self):
        draws = gumbel_r.rvs(size=2000, random_state=0)
        assert ks_to_limit(LimitLaw.SUPREMUM, draws) < 0.06
        assert ks_to_limit(LimitLaw.SLRT, draws) > 0.1

    def test_ks_needs_values(self):
        with pytest.raises(EmptySample):
            ks_to_limit(LimitLaw.LRT, [])


class TestInterval:
    def test_empty_at_practical_sizes(self):
        for n in (1000, 10**7, 10**20):
            with pytest.raises(EmptyInterval):
                interval_a2(n)

    def test_nonempty_at_astronomical_sizes(self):
        region = interval_a2(10**100)
        assert 0.0 < region.lower < region.upper
        assert region.width == pytest.approx(region.upper - region.lower)

    def test_contains(self):
        region = IntervalA2(1.0, 2.0)
        np.testing.assert_array_equal(region.contains(np.array([0.5, 1.0, 1.5, 2.0, 2.5])),
                                      [False, True, True, True, False])

    def test_degenerate_interval(self):
        with pytest.raises(EmptyInterval):
            IntervalA2(1.0, 1.0)


class TestUniformityReport:
    def test_report_with_explicit_interval(self):
        report = that_uniformity_report(200, 0.5, reps=12, seed=4, interval=(0.0, 2.0))
        assert report.n1 == 100
        assert report.abs_t_hat.shape == (12,)
        assert (report.abs_t_hat <= location_bound(np.zeros(100)) + 1e-12).all()
        assert 0.0 <= report.fraction <= 1.0
        assert 0.0 <= report.ks <= 1.0
        assert report.to_dict()["upper"] == 2.0

    def test_reproducible(self):
        a = that_uniformity_report(120, 0.5, reps=5, seed=9, interval=(0.0, 3.0))
        b = that_uniformity_report(120, 0.5, reps=5, seed=9, interval=(0.0, 3.0))
        np.testing.assert_array_equal(a.abs_t_hat, b.abs_t_hat)

    def test_nothing_inside(self):
        report = that_uniformity_report(100, 0.5, reps=4, seed=1, interval=(50.0, 60.0))
        assert report.fraction == 0.0
        assert report.ks == 1.0

    def test_default_interval_is_empty(self):
        with pytest.raises(EmptyInterval):
            that_uniformity_report(1000, 0.5, reps=3, seed=0)
