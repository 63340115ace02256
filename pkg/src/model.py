"""
Mixture model module.

Densities of the contaminated and two-mean Gaussian mixtures, the alternative
sequences used by the simulation cases, and the Bernoulli-shift sampler.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union
import logging
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import norm

from src.error_handler import DegenerateSize, InvalidScenario

logger = logging.getLogger(__name__)


class CaseId(str, Enum):
    """Simulation cases; values are the identifiers used in files and flags."""

    I = "i"
    II = "ii"
    III = "iii"
    IV = "iv"
    V = "v"
    CONTIG = "contig"

    @property
    def two_mean(self) -> bool:
        """True for the cases drawn from the two-unknown-means model."""
        return self in (CaseId.IV, CaseId.V)


@dataclass(frozen=True)
class ContaminatedParams:
    """Parameters of (1 - p) N(0, 1) + p N(t, 1)."""

    p: float
    t: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise InvalidScenario(f"mixing weight p={self.p} outside [0, 1]")

    @property
    def is_null(self) -> bool:
        return self.p == 0.0 or self.t == 0.0


@dataclass(frozen=True)
class TwoMeanParams:
    """Parameters of (1 - p) N(t1, 1) + p N(t2, 1)."""

    p: float
    t1: float
    t2: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise InvalidScenario(f"mixing weight p={self.p} outside [0, 1]")

    def swapped(self) -> "TwoMeanParams":
        """Same density with the component labels exchanged."""
        return TwoMeanParams(p=1.0 - self.p, t1=self.t2, t2=self.t1)

    def canonical(self) -> "TwoMeanParams":
        """Label-canonical form with t1 <= t2."""
        return self.swapped() if self.t1 > self.t2 else self


MixtureParams = Union[ContaminatedParams, TwoMeanParams]


@dataclass(frozen=True)
class AlternativeScenario:
    """
    One point of an alternative sequence.

    Attributes:
        case_id: Simulation case
        gamma: Drift constant; 0 gives the null
        n: Sample size
        mu: Limiting location for the contiguous case (ignored otherwise)
    """

    case_id: CaseId
    gamma: float
    n: int
    mu: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidScenario(f"sample size must be positive, got n={self.n}")

    def with_gamma(self, gamma: float) -> "AlternativeScenario":
        return AlternativeScenario(case_id=self.case_id, gamma=gamma, n=self.n, mu=self.mu)


@dataclass
class Sample:
    """
    Ordered observations with provenance.

    Attributes:
        values: Observations as a 1-D float array
        seed: Seed the sample was drawn with, if simulated
        scenario: Generating scenario, if simulated
        indicators: Bernoulli shift indicators J used by the sampler
    """

    values: np.ndarray
    seed: Any = None
    scenario: Optional[AlternativeScenario] = None
    indicators: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float).ravel()

    def __len__(self) -> int:
        return int(self.values.size)


def as_values(data: Union[Sample, ArrayLike]) -> np.ndarray:
    """
    Return the observations of a Sample or an array-like as a float vector.

    Args:
        data: Sample or any real array-like

    Returns:
        1-D float array (not copied when already one)
    """
    if isinstance(data, Sample):
        return data.values
    return np.asarray(data, dtype=float).ravel()


def _log_mix(log_weight_a: np.ndarray, log_a: np.ndarray,
             log_weight_b: np.ndarray, log_b: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.logaddexp(log_weight_a + log_a, log_weight_b + log_b)


def log_density_contaminated(params: ContaminatedParams, x: ArrayLike) -> Union[float, np.ndarray]:
    """
    Log-density of the contaminated mixture via log-sum-exp.

    Args:
        params: Mixture parameters
        x: Point or array of points

    Returns:
        log f_{p,t}(x), scalar for scalar input

    Example:
        >>> log_density_contaminated(ContaminatedParams(p=0.0, t=5.0), 0.0)
        -0.9189385332046727
    """
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-params.p)
        log_p = np.log(params.p)
    result = _log_mix(log_q, norm.logpdf(x_arr), log_p, norm.logpdf(x_arr, loc=params.t))
    return float(result) if result.ndim == 0 else result


def log_density_two_mean(params: TwoMeanParams, x: ArrayLike) -> Union[float, np.ndarray]:
    """
    Log-density of the two-mean mixture via log-sum-exp.

    Args:
        params: Mixture parameters
        x: Point or array of points

    Returns:
        log f_{p,t1,t2}(x), scalar for scalar input
    """
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-params.p)
        log_p = np.log(params.p)
    result = _log_mix(
        log_q, norm.logpdf(x_arr, loc=params.t1), log_p, norm.logpdf(x_arr, loc=params.t2)
    )
    return float(result) if result.ndim == 0 else result


def detection_scale(n: int) -> float:
    """
    The detection-boundary scale s = (n^{-1} ln ln n)^{1/2}.

    Raises:
        DegenerateSize: If n < 3 (ln ln n must be positive)
    """
    if n < 3:
        raise DegenerateSize(f"ln ln n needs n >= 3, got n={n}")
    return math.sqrt(math.log(math.log(n)) / n)


def resolve_scenario(scenario: AlternativeScenario) -> MixtureParams:
    """
    Resolve a scenario into concrete mixture parameters.

    Cases I and III use q = gamma s sqrt(ln n), mu = (ln n)^{-1/2}; case II
    uses q = 1/2, mu = 2 gamma s; cases IV and V use q = 1/2 with
    (mu1, mu2) = (-4, 4) gamma s and (-3, 5) gamma s. CONTIG uses
    q = gamma n^{-1/2} / mu with location mu.

    Args:
        scenario: Scenario to resolve

    Returns:
        ContaminatedParams for I-III and CONTIG, TwoMeanParams for IV-V

    Raises:
        DegenerateSize: If n < 3
        InvalidScenario: If the mixing weight falls outside [0, 1]

    Example:
        >>> resolve_scenario(AlternativeScenario(CaseId.II, 1.0, 1000))
        ContaminatedParams(p=0.5, t=0.0879236...)
    """
    n = scenario.n
    gamma = float(scenario.gamma)
    s = detection_scale(n)
    case = CaseId(scenario.case_id)

    if case in (CaseId.I, CaseId.III):
        root_log_n = math.sqrt(math.log(n))
        q = gamma * s * root_log_n
        mu = 1.0 / root_log_n
        _check_weight(q, scenario)
        return ContaminatedParams(p=q, t=mu)

    if case is CaseId.II:
        return ContaminatedParams(p=0.5, t=2.0 * gamma * s)

    if case is CaseId.IV:
        return TwoMeanParams(p=0.5, t1=-4.0 * gamma * s, t2=4.0 * gamma * s)

    if case is CaseId.V:
        return TwoMeanParams(p=0.5, t1=-3.0 * gamma * s, t2=5.0 * gamma * s)

    # CONTIG: sqrt(n) q mu = gamma exactly at every n
    if scenario.mu <= 0.0:
        raise InvalidScenario(f"contiguous case needs mu > 0, got mu={scenario.mu}")
    q = gamma / (math.sqrt(n) * scenario.mu)
    _check_weight(q, scenario)
    return ContaminatedParams(p=q, t=scenario.mu)


def _check_weight(q: float, scenario: AlternativeScenario) -> None:
    if not 0.0 <= q <= 1.0:
        raise InvalidScenario(
            f"case {CaseId(scenario.case_id).value}: gamma={scenario.gamma}, n={scenario.n} "
            f"gives mixing weight {q:.6g} outside [0, 1]"
        )


def sample(scenario: AlternativeScenario, seed: Any) -> Sample:
    """
    Draw n observations through the indicator representation.

    Each observation is a standard normal base draw X0 plus a shift applied
    when a Bernoulli(q) indicator J fires. The base draws and the uniforms
    behind J come from the same seeded stream, so two scenarios sampled with
    one seed share their randomness.

    Args:
        scenario: Scenario to draw from
        seed: Anything numpy.random.default_rng accepts (int, sequence, SeedSequence)

    Returns:
        Sample with values, seed, scenario and indicators

    Raises:
        InvalidScenario: If the mixing weight falls outside [0, 1]
    """
    params = resolve_scenario(scenario)
    rng = np.random.default_rng(seed)
    base = rng.standard_normal(scenario.n)
    indicators = rng.random(scenario.n) < params.p

    if isinstance(params, ContaminatedParams):
        values = base + np.where(indicators, params.t, 0.0)
    else:
        values = base + np.where(indicators, params.t2, params.t1)

    return Sample(values=values, seed=seed, scenario=scenario, indicators=indicators)
