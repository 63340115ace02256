"""
Tests for the test strategy objects and their factory.
"""

import math

import numpy as np
import pytest

from src.error_handler import DegenerateSize, InvalidExperiment
from src.likelihood import MleResult
from src.methods import (
    LikelihoodRatioTest,
    SplitLikelihoodRatioTest,
    create_test,
)
from src.model import TwoMeanParams
from src.universal import (
    SplitConfig,
    ThresholdRule,
    asymptotic_lrt_threshold,
    slrt_contaminated,
    universal_threshold,
)


class TestFactory:
    def test_lrt(self):
        test = create_test("lrt")
        assert isinstance(test, LikelihoodRatioTest)
        assert test.model == "contaminated"
        assert test.default_rule is ThresholdRule.ASYMPTOTIC_LRT

    def test_slrt_is_case_insensitive(self):
        test = create_test("SLRT", "two-mean", m0=0.4, shuffle=True, seed=5, restarts=3)
        assert isinstance(test, SplitLikelihoodRatioTest)
        assert test.split == SplitConfig(m0=0.4, shuffle=True, seed=5)
        assert test.restarts == 3
        assert test.default_rule is ThresholdRule.UNIVERSAL
        assert "m0=0.4" in test.label

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="Unsupported method"):
            create_test("wald")

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="Unsupported model"):
            create_test("lrt", "three-mean")


class TestRules:
    def test_lrt_rejects_universal_rule(self):
        with pytest.raises(InvalidExperiment):
            create_test("lrt").threshold(1000, 0.05, ThresholdRule.UNIVERSAL)

    def test_slrt_rejects_lrt_rule(self):
        with pytest.raises(InvalidExperiment):
            create_test("slrt").check_rule("asymptotic_lrt")

    def test_slrt_threshold_uses_split_fraction(self):
        test = create_test("slrt", m0=0.6)
        assert test.threshold(1000, 0.05, ThresholdRule.ASYMPTOTIC_SLRT) == pytest.approx(
            2.0 * math.sqrt(1.5 * math.log(math.log(1000))) * 1.6448536269514722
            - 1.5 * math.log(math.log(1000)),
            abs=1e-9,
        )


class TestRun:
    def test_lrt_on_zero_sample(self):
        result = create_test("lrt").run(np.zeros(1000), 0.05)
        assert result.statistic == 0.0
        assert not result.reject
        assert result.e_value is None
        assert result.threshold == asymptotic_lrt_threshold(1000, 0.05)

    def test_lrt_small_sample_has_no_threshold(self):
        with pytest.raises(DegenerateSize):
            create_test("lrt").run([2.0], 0.05)

    def test_slrt_reports_e_value(self, null_values):
        test = create_test("slrt", m0=0.5)
        result = test.run(null_values, 0.05)
        expected = slrt_contaminated(null_values, SplitConfig(m0=0.5)).statistic
        assert result.statistic == expected
        assert result.threshold == universal_threshold(0.05)
        assert result.e_value == pytest.approx(math.exp(expected / 2.0))

    def test_slrt_asymptotic_rule(self, signal_values):
        result = create_test("slrt", m0=0.5).run(signal_values, 0.05, rule="asymptotic_slrt")
        assert result.threshold_rule is ThresholdRule.ASYMPTOTIC_SLRT
        assert result.reject

    def test_two_mean_lrt_forwards_restarts_and_seed(self, mocker):
        fit = MleResult(
            params=TwoMeanParams(p=0.5, t1=-1.0, t2=1.0),
            loglik=-10.0,
            lambda_=3.5,
            t_hat=None,
            converged=True,
            iterations=4,
            null_loglik=-11.75,
        )
        patched = mocker.patch("src.methods.lrt_two_mean", return_value=fit)
        test = create_test("lrt", "two-mean", restarts=3)
        assert test.statistic([0.0, 1.0, 2.0], seed=7) == 3.5
        patched.assert_called_once_with([0.0, 1.0, 2.0], restarts=3, seed=7)

    def test_two_mean_slrt(self, rng):
        x = rng.standard_normal(100)
        statistic = create_test("slrt", "two-mean", restarts=2).statistic(x, seed=1)
        assert math.isfinite(statistic)
