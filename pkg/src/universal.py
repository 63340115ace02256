"""
Universal inference module.

Data splitting, the split likelihood ratio statistic and its e-value, and the
three decision thresholds (universal, asymptotic LRT, asymptotic SLRT).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union
import logging
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import norm

from src.error_handler import (
    DegenerateSize,
    DegenerateSplit,
    InvalidFraction,
    InvalidLevel,
    TooFewPoints,
)
from src.likelihood import em_fit_two_mean, lrt_contaminated
from src.model import (
    ContaminatedParams,
    Sample,
    TwoMeanParams,
    as_values,
    log_density_two_mean,
)

logger = logging.getLogger(__name__)

# Smallest n accepted by the asymptotic thresholds and standardizers
MIN_ASYMPTOTIC_N = 16


class ThresholdRule(str, Enum):
    """Decision threshold rules; values are the identifiers used in files and flags."""

    UNIVERSAL = "universal"
    ASYMPTOTIC_LRT = "asymptotic_lrt"
    ASYMPTOTIC_SLRT = "asymptotic_slrt"


@dataclass(frozen=True)
class SplitConfig:
    """
    How a sample is divided into D0 (inference) and D1 (estimation).

    Attributes:
        m0: Fraction of the data in D0, in (0, 1)
        shuffle: Shuffle before splitting
        seed: Shuffle seed
    """

    m0: float = 0.5
    shuffle: bool = False
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        check_fraction(self.m0)

    @property
    def m1(self) -> float:
        return 1.0 - self.m0

    @property
    def beta(self) -> float:
        """The ratio m0 / m1."""
        return self.m0 / self.m1

    def sizes(self, n: int) -> Tuple[int, int]:
        """
        (n0, n1) = (floor(m0 n), n - n0).

        Raises:
            DegenerateSplit: If either part would be empty
        """
        # the small offset keeps floor(0.6 * 1000) at 600 despite binary rounding
        n0 = int(math.floor(self.m0 * n + 1e-9))
        n1 = n - n0
        if n0 < 1 or n1 < 1:
            raise DegenerateSplit(f"m0={self.m0} with n={n} gives n0={n0}, n1={n1}")
        return n0, n1


@dataclass(frozen=True)
class TestResult:
    """
    Outcome of one test.

    Attributes:
        statistic: Test statistic
        threshold_rule: Rule that produced the threshold
        threshold: Critical value
        reject: statistic > threshold
        e_value: exp(statistic / 2) for split tests, None otherwise
        alpha: Significance level
    """

    __test__ = False  # not a pytest class

    statistic: float
    threshold_rule: ThresholdRule
    threshold: float
    reject: bool
    e_value: Optional[float]
    alpha: float


def check_level(alpha: float, allow_one: bool = False) -> None:
    """
    Raises:
        InvalidLevel: If alpha is outside (0, 1) (or (0, 1] with allow_one)
    """
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")


def check_fraction(m0: float) -> None:
    """
    Raises:
        InvalidFraction: If m0 is outside (0, 1)
    """
    if not 0.0 < m0 < 1.0:
        raise InvalidFraction(f"m0 must lie in (0, 1), got {m0}")


def check_asymptotic_size(n: int) -> float:
    """
    Return ln ln n for an n accepted by the asymptotic formulas.

    Raises:
        DegenerateSize: If n < 16
    """
    if n < MIN_ASYMPTOTIC_N:
        raise DegenerateSize(
            f"asymptotic formulas need n >= {MIN_ASYMPTOTIC_N}, got n={n}"
        )
    return math.log(math.log(n))


def split(data: Union[Sample, ArrayLike], config: SplitConfig) -> Tuple[Sample, Sample]:
    """
    Split a sample into D0 (first n0 elements) and D1 (the remaining n1).

    With config.shuffle the observations are permuted with config.seed first.

    Raises:
        DegenerateSplit: If either part would be empty
    """
    x = as_values(data)
    n0, _ = config.sizes(x.size)
    if config.shuffle:
        x = np.random.default_rng(config.seed).permutation(x)
    return Sample(values=x[:n0]), Sample(values=x[n0:])


def e_value(statistic: float) -> float:
    """exp(statistic / 2), the likelihood ratio behind a split statistic (inf on overflow)."""
    try:
        return math.exp(0.5 * statistic)
    except OverflowError:
        return math.inf


def split_statistic_contaminated(
    d0: Union[Sample, ArrayLike], params: ContaminatedParams
) -> float:
    """
    2 * sum_{D0} [log f_{p,t}(x) - log phi(x)] for fixed fitted parameters.

    Evaluated as 2 * sum log(1 - p + p exp(t x - t^2 / 2)) in log-sum-exp form;
    exactly 0 when p = 0.
    """
    x = as_values(d0)
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-params.p)
        log_p = np.log(params.p)
    terms = np.logaddexp(log_q, log_p + params.t * x - 0.5 * params.t * params.t)
    return float(2.0 * terms.sum())


def split_statistic_two_mean(d0: Union[Sample, ArrayLike], params: TwoMeanParams) -> float:
    """
    2 * sum_{D0} [log f_{p,t1,t2}(x) - log phi(x; mean(D0), 1)] for fixed fitted parameters.
    """
    x = as_values(d0)
    full = np.asarray(log_density_two_mean(params, x)).sum()
    null = norm.logpdf(x, loc=x.mean()).sum()
    return float(2.0 * (full - null))


def universal_threshold(alpha: float) -> float:
    """
    -2 ln alpha; alpha = 1 gives 0.

    Raises:
        InvalidLevel: If alpha is outside (0, 1]

    Example:
        >>> round(universal_threshold(0.05), 7)
        5.9914645
    """
    check_level(alpha, allow_one=True)
    return -2.0 * math.log(alpha)


def asymptotic_lrt_threshold(n: int, alpha: float) -> float:
    """
    ln ln n - ln(2 pi^2) - 2 ln ln (1 - alpha)^{-1}.

    Raises:
        InvalidLevel: If alpha is outside (0, 1)
        DegenerateSize: If n < 16
    """
    check_level(alpha)
    log_log_n = check_asymptotic_size(n)
    return log_log_n - math.log(2.0 * math.pi ** 2) - 2.0 * math.log(-math.log1p(-alpha))


def asymptotic_slrt_threshold(n: int, alpha: float, m0: float) -> float:
    """
    2 sqrt(beta ln ln n) Phi^{-1}(1 - alpha) - beta ln ln n with beta = m0 / (1 - m0).

    Raises:
        InvalidLevel: If alpha is outside (0, 1)
        InvalidFraction: If m0 is outside (0, 1)
        DegenerateSize: If n < 16
    """
    check_level(alpha)
    check_fraction(m0)
    log_log_n = check_asymptotic_size(n)
    beta = m0 / (1.0 - m0)
    scale = beta * log_log_n
    return 2.0 * math.sqrt(scale) * float(norm.isf(alpha)) - scale


def threshold_for(rule: ThresholdRule, n: int, alpha: float, m0: Optional[float] = None) -> float:
    """
    Threshold value for a rule.

    Raises:
        InvalidFraction: If the SLRT rule is requested without a valid m0
    """
    rule = ThresholdRule(rule)
    if rule is ThresholdRule.UNIVERSAL:
        return universal_threshold(alpha)
    if rule is ThresholdRule.ASYMPTOTIC_LRT:
        return asymptotic_lrt_threshold(n, alpha)
    if m0 is None:
        raise InvalidFraction("asymptotic SLRT threshold needs m0")
    return asymptotic_slrt_threshold(n, alpha, m0)


def decide(
    statistic: float,
    threshold: float,
    rule: ThresholdRule,
    alpha: float,
    with_e_value: bool = False,
) -> TestResult:
    """Build the TestResult for a statistic compared against a threshold."""
    return TestResult(
        statistic=float(statistic),
        threshold_rule=ThresholdRule(rule),
        threshold=float(threshold),
        reject=bool(statistic > threshold),
        e_value=e_value(statistic) if with_e_value else None,
        alpha=float(alpha),
    )


def slrt_contaminated(
    data: Union[Sample, ArrayLike],
    config: SplitConfig,
    alpha: float = 0.05,
    rule: ThresholdRule = ThresholdRule.UNIVERSAL,
) -> TestResult:
    """
    Split likelihood ratio test for the contaminated model.

    Fits (p, t) on D1 with the global location search and evaluates the
    likelihood ratio against N(0, 1) on D0. The statistic may be negative.

    Raises:
        DegenerateSplit: If either part would be empty
    """
    d0, d1 = split(data, config)
    fit = lrt_contaminated(d1)
    statistic = split_statistic_contaminated(d0, fit.params)
    n = len(d0) + len(d1)
    threshold = threshold_for(rule, n, alpha, config.m0)
    return decide(statistic, threshold, rule, alpha, with_e_value=True)


def slrt_two_mean(
    data: Union[Sample, ArrayLike],
    config: SplitConfig,
    alpha: float = 0.05,
    rule: ThresholdRule = ThresholdRule.UNIVERSAL,
    restarts: Optional[int] = None,
    seed: Optional[int] = 0,
) -> TestResult:
    """
    Split likelihood ratio test for the two-mean model.

    Fits (p, t1, t2) by EM on D1; the D0 null fit is N(mean(D0), 1).

    Raises:
        TooFewPoints: If either part has fewer than 2 observations
    """
    x = as_values(data)
    try:
        n0, n1 = config.sizes(x.size)
    except DegenerateSplit as e:
        raise TooFewPoints(str(e)) from e
    if n0 < 2 or n1 < 2:
        raise TooFewPoints(f"two-mean split needs 2 points per part, got n0={n0}, n1={n1}")

    d0, d1 = split(x, config)
    fit = em_fit_two_mean(d1, restarts=restarts, seed=seed)
    statistic = split_statistic_two_mean(d0, fit.params)
    threshold = threshold_for(rule, x.size, alpha, config.m0)
    return decide(statistic, threshold, rule, alpha, with_e_value=True)
