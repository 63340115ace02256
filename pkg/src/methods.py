"""
Test method module.

Homogeneity tests as interchangeable strategy objects, so the CLI and the
Monte Carlo engine can evaluate any (method, model) pair through one interface.
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple, Union

from numpy.typing import ArrayLike

from src.error_handler import InvalidExperiment
from src.likelihood import lrt_contaminated, lrt_two_mean
from src.model import Sample, as_values
from src.universal import (
    SplitConfig,
    TestResult,
    ThresholdRule,
    decide,
    slrt_contaminated,
    slrt_two_mean,
    threshold_for,
)

MODELS = ("contaminated", "two-mean")
METHODS = ("lrt", "slrt")


class HomogeneityTest(ABC):
    """
    Abstract base class for homogeneity tests.

    Defines the interface shared by the classical and the split likelihood
    ratio tests using Strategy Pattern.
    """

    # Rules the test can be calibrated with; the first is the default
    RULES: Tuple[ThresholdRule, ...] = ()

    def __init__(self, model: str, restarts: Optional[int] = None) -> None:
        if model not in MODELS:
            raise ValueError(f"Unsupported model: {model}")
        self.model = model
        self.restarts = restarts

    @property
    def default_rule(self) -> ThresholdRule:
        return self.RULES[0]

    @abstractmethod
    def statistic(self, data: Union[Sample, ArrayLike], seed: Optional[int] = 0) -> float:
        """
        Compute the test statistic.

        Args:
            data: Observations
            seed: Seed for EM random restarts (two-mean model)

        Returns:
            Test statistic
        """
        pass

    def threshold(self, n: int, alpha: float, rule: ThresholdRule) -> float:
        """
        Critical value for n observations.

        Raises:
            InvalidExperiment: If the rule does not apply to this test
        """
        rule = self.check_rule(rule)
        return threshold_for(rule, n, alpha)

    def check_rule(self, rule: Union[str, ThresholdRule]) -> ThresholdRule:
        rule = ThresholdRule(rule)
        if rule not in self.RULES:
            allowed = ", ".join(r.value for r in self.RULES)
            raise InvalidExperiment(
                f"rule {rule.value} does not apply to {self.label}; use one of: {allowed}"
            )
        return rule

    @property
    def label(self) -> str:
        return f"{type(self).__name__}({self.model})"

    def run(
        self,
        data: Union[Sample, ArrayLike],
        alpha: float,
        rule: Optional[ThresholdRule] = None,
        seed: Optional[int] = 0,
    ) -> TestResult:
        """
        Compute the statistic and compare it with the rule's threshold.

        Args:
            data: Observations
            alpha: Significance level
            rule: Threshold rule (default: the test's first rule)
            seed: Seed for EM random restarts

        Returns:
            TestResult
        """
        x = as_values(data)
        rule = self.check_rule(rule if rule is not None else self.default_rule)
        threshold = self.threshold(x.size, alpha, rule)
        return decide(
            self.statistic(x, seed=seed), threshold, rule, alpha,
            with_e_value=isinstance(self, SplitLikelihoodRatioTest),
        )


class LikelihoodRatioTest(HomogeneityTest):
    """Classical likelihood ratio test, calibrated by its Gumbel limit."""

    RULES = (ThresholdRule.ASYMPTOTIC_LRT,)

    def statistic(self, data: Union[Sample, ArrayLike], seed: Optional[int] = 0) -> float:
        if self.model == "contaminated":
            return lrt_contaminated(data).lambda_
        return lrt_two_mean(data, restarts=self.restarts, seed=seed).lambda_


class SplitLikelihoodRatioTest(HomogeneityTest):
    """Split likelihood ratio test (fit on D1, evaluate on D0)."""

    RULES = (ThresholdRule.UNIVERSAL, ThresholdRule.ASYMPTOTIC_SLRT)

    def __init__(self, model: str, split: SplitConfig, restarts: Optional[int] = None) -> None:
        super().__init__(model, restarts)
        self.split = split

    @property
    def label(self) -> str:
        return f"{type(self).__name__}({self.model}, m0={self.split.m0})"

    def statistic(self, data: Union[Sample, ArrayLike], seed: Optional[int] = 0) -> float:
        if self.model == "contaminated":
            return slrt_contaminated(data, self.split).statistic
        return slrt_two_mean(data, self.split, restarts=self.restarts, seed=seed).statistic

    def threshold(self, n: int, alpha: float, rule: ThresholdRule) -> float:
        rule = self.check_rule(rule)
        return threshold_for(rule, n, alpha, self.split.m0)


def create_test(
    method: str,
    model: str = "contaminated",
    m0: float = 0.5,
    shuffle: bool = False,
    seed: Optional[int] = None,
    restarts: Optional[int] = None,
) -> HomogeneityTest:
    """
    Factory function to create a homogeneity test.

    Args:
        method: 'lrt' or 'slrt' (case-insensitive)
        model: 'contaminated' or 'two-mean'
        m0: Split fraction (SLRT only)
        shuffle: Shuffle before splitting (SLRT only)
        seed: Shuffle seed (SLRT only)
        restarts: EM starting points (two-mean model, default Config.EM_RESTARTS)

    Returns:
        HomogeneityTest instance

    Raises:
        ValueError: If method or model is not supported

    Example:
        >>> test = create_test('slrt', 'contaminated', m0=0.4)
        >>> test.default_rule.value
        'universal'
    """
    method = method.lower()
    if method == "lrt":
        return LikelihoodRatioTest(model, restarts)
    elif method == "slrt":
        return SplitLikelihoodRatioTest(
            model, SplitConfig(m0=m0, shuffle=shuffle, seed=seed), restarts
        )
    else:
        raise ValueError(f"Unsupported method: {method}")
