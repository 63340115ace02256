"""
Diagnostics module.

The empirical process S_n(t) and its supremum M_n, standardizations of the
test statistics against their limit laws, and the uniformity check for the
location estimate fitted on the estimation half of a split.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, Optional, Tuple, Union
import logging
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import gumbel_r, kstest, norm, uniform

from src.config import Config
from src.error_handler import EmptyInterval, EmptySample, InvalidFraction
from src.likelihood import (
    argmax_tiebreak,
    candidate_peaks,
    golden_section_search,
    location_bound,
    lrt_contaminated,
    symmetric_grid,
)
from src.model import AlternativeScenario, CaseId, Sample, as_values, sample
from src.replication import replication_seed, run_replications
from src.universal import (
    SplitConfig,
    check_asymptotic_size,
    check_fraction,
    split,
)

logger = logging.getLogger(__name__)

LOG_ROOT_TWO_PI = math.log(math.sqrt(2.0) * math.pi)
LOG_TWO_PI_SQUARE = math.log(2.0 * math.pi ** 2)


class LimitLaw(str, Enum):
    """Statistics with a known standardized limit law."""

    SUPREMUM = "supremum"  # M_n, Gumbel exp(-exp(-x))
    LRT = "lrt"  # lambda_n, exp(-exp(-x / 2))
    SLRT = "slrt"  # lambda_split, standard normal


@dataclass(frozen=True)
class ProcessCurve:
    """
    S_n(t) over the scanned grid together with its supremum.

    Attributes:
        t_grid: Scanned locations (ascending)
        s_values: S_n at each grid location
        m_n: Supremum after refinement (>= 0 since S_n(0) = 0)
        t_star: Location of the supremum
    """

    t_grid: np.ndarray = field(repr=False)
    s_values: np.ndarray = field(repr=False)
    m_n: float
    t_star: float


@dataclass(frozen=True)
class IntervalA2:
    """Closed interval [lower, upper] on which |t_hat| is asymptotically uniform."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise EmptyInterval(f"interval [{self.lower:.6g}, {self.upper:.6g}] is empty")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (values >= self.lower) & (values <= self.upper)


@dataclass
class UniformityReport:
    """
    Distribution summary of |t_hat| fitted on D1 under the null.

    Attributes:
        n: Full sample size
        n1: Size of the estimation half
        m0: Split fraction
        reps: Replications
        seed: Experiment seed
        interval: Interval the fraction and KS distance refer to
        fraction: Share of |t_hat| inside the interval
        ks: KS distance of the inside values to the uniform law on the interval
            (1.0 when no value falls inside)
        abs_t_hat: |t_hat| per replication
    """

    n: int
    n1: int
    m0: float
    reps: int
    seed: int
    interval: IntervalA2
    fraction: float
    ks: float
    abs_t_hat: np.ndarray = field(repr=False)

    def to_dict(self) -> Dict[str, Union[int, float]]:
        return {
            "n": self.n,
            "n1": self.n1,
            "m0": self.m0,
            "reps": self.reps,
            "seed": self.seed,
            "lower": self.interval.lower,
            "upper": self.interval.upper,
            "fraction": self.fraction,
            "ks": self.ks,
        }


def process_values(data: Union[Sample, ArrayLike], grid: ArrayLike) -> np.ndarray:
    """
    S_n(t) = n^{-1/2} sum_i (exp(t X_i - t^2 / 2) - 1) exp(-t^2 / 2) on a grid.

    Computed in row chunks of at most Config.CHUNK_ELEMENTS entries.

    Raises:
        EmptySample: If data is empty
    """
    x = as_values(data)
    n = x.size
    if n == 0:
        raise EmptySample("empirical process needs at least one observation")

    t = np.asarray(grid, dtype=float).ravel()
    rows = max(1, Config.CHUNK_ELEMENTS // n)
    out = np.empty(t.size)
    for start in range(0, t.size, rows):
        tc = t[start:start + rows]
        half_sq = 0.5 * tc * tc
        z = np.expm1(np.outer(tc, x) - half_sq[:, None])
        out[start:start + rows] = z.sum(axis=1) * np.exp(-half_sq) / math.sqrt(n)
    return out


def process_supremum(
    data: Union[Sample, ArrayLike],
    grid_step: Optional[float] = None,
    refine_tol: Optional[float] = None,
) -> ProcessCurve:
    """
    Supremum M_n of the empirical process over |t| <= T_max.

    Uses the same grid and refinement policy as the location search of the
    likelihood ratio statistic, so both argmaxes are comparable.

    Args:
        data: Observations
        grid_step: Grid spacing (default Config.GRID_STEP)
        refine_tol: Location tolerance of the refinement (default Config.REFINE_TOL)

    Returns:
        ProcessCurve with grid values and the refined supremum

    Raises:
        EmptySample: If data is empty

    Example:
        >>> process_supremum([0.0, 0.0, 0.0]).m_n
        0.0
    """
    x = as_values(data)
    step = grid_step if grid_step is not None else Config.GRID_STEP
    tol = refine_tol if refine_tol is not None else Config.REFINE_TOL

    bound = location_bound(x)
    grid = symmetric_grid(bound, step)
    s_values = process_values(x, grid)

    best = argmax_tiebreak(grid, s_values)
    t_star = float(grid[best])
    m_n = max(float(s_values[best]), 0.0)

    if m_n > 0.0:
        spacing = bound / (grid.size // 2)
        for idx in candidate_peaks(grid, s_values):
            lo = max(-bound, float(grid[idx]) - spacing)
            hi = min(bound, float(grid[idx]) + spacing)
            t_ref, m_ref, _ = golden_section_search(
                lambda t: float(process_values(x, [t])[0]), lo, hi, tol
            )
            if m_ref > m_n:
                t_star, m_n = float(t_ref), float(m_ref)

    return ProcessCurve(t_grid=grid, s_values=s_values, m_n=m_n, t_star=t_star)


def gumbel_standardize_m(m_n: float, n: int) -> float:
    """
    sqrt(ln ln n) (M_n - sqrt(ln ln n)) + ln(sqrt(2) pi).
    At M_n = sqrt(ln ln n) the value is ln(sqrt(2) pi), about 1.491303.

    Raises:
        DegenerateSize: If n < 16
    """
    root = math.sqrt(check_asymptotic_size(n))
    return root * (m_n - root) + LOG_ROOT_TWO_PI


def gumbel_standardize_lambda(lambda_: float, n: int) -> float:
    """
    lambda - ln ln n + ln(2 pi^2); the limit law has CDF exp(-exp(-x / 2)).

    Raises:
        DegenerateSize: If n < 16
    """
    return lambda_ - check_asymptotic_size(n) + LOG_TWO_PI_SQUARE


def normal_standardize_split(lambda_split: float, n: int, m0: float) -> float:
    """
    (lambda_split + beta ln ln n) / (2 sqrt(beta ln ln n)) with beta = m0 / (1 - m0).
    At lambda_split = 0 the value is sqrt(beta ln ln n) / 2.

    Raises:
        InvalidFraction: If m0 is outside (0, 1)
        DegenerateSize: If n < 16
    """
    check_fraction(m0)
    scale = m0 / (1.0 - m0) * check_asymptotic_size(n)
    return (lambda_split + scale) / (2.0 * math.sqrt(scale))


def standardize(kind: LimitLaw, value: float, n: int, m0: Optional[float] = None) -> float:
    """Dispatch to the standardizer of a limit law (m0 is needed for SLRT)."""
    kind = LimitLaw(kind)
    if kind is LimitLaw.SUPREMUM:
        return gumbel_standardize_m(value, n)
    if kind is LimitLaw.LRT:
        return gumbel_standardize_lambda(value, n)
    if m0 is None:
        raise InvalidFraction("split standardization needs m0")
    return normal_standardize_split(value, n, m0)


def limit_cdf(kind: LimitLaw, x: ArrayLike) -> Union[float, np.ndarray]:
    """
    CDF of the limit law of a standardized statistic.

    Args:
        kind: Which statistic
        x: Standardized value(s)

    Returns:
        exp(-exp(-x)) for the supremum, exp(-exp(-x / 2)) for lambda_n,
        Phi(x) for lambda_split
    """
    kind = LimitLaw(kind)
    if kind is LimitLaw.SUPREMUM:
        result = gumbel_r.cdf(x)
    elif kind is LimitLaw.LRT:
        result = gumbel_r.cdf(x, scale=2.0)
    else:
        result = norm.cdf(x)
    return float(result) if np.ndim(result) == 0 else result


def ks_to_limit(kind: LimitLaw, standardized: ArrayLike) -> float:
    """
    Kolmogorov-Smirnov distance between standardized statistics and their limit law.

    Raises:
        EmptySample: If no values are given
    """
    values = np.asarray(standardized, dtype=float).ravel()
    if values.size == 0:
        raise EmptySample("KS distance needs at least one value")
    return float(kstest(values, partial(limit_cdf, kind)).statistic)


def interval_a2(n: int) -> IntervalA2:
    """
    [2 sqrt(ln ln ln n), sqrt(ln n / 2) - 2 sqrt(ln ln n)].

    Raises:
        DegenerateSize: If n < 16
        EmptyInterval: If lower >= upper (the case for every n below roughly e^89)
    """
    log_log_n = check_asymptotic_size(n)
    lower = 2.0 * math.sqrt(math.log(log_log_n))
    upper = math.sqrt(0.5 * math.log(n)) - 2.0 * math.sqrt(log_log_n)
    return IntervalA2(lower=lower, upper=upper)


def _uniformity_replication(r: int, n: int, m0: float, seed: int) -> float:
    null = AlternativeScenario(case_id=CaseId.I, gamma=0.0, n=n)
    data = sample(null, replication_seed(seed, r))
    _, d1 = split(data, SplitConfig(m0=m0))
    return abs(float(lrt_contaminated(d1).t_hat))


def that_uniformity_report(
    n: int,
    m0: float,
    reps: int,
    seed: int,
    interval: Optional[Tuple[float, float]] = None,
    workers: int = 1,
    progress: bool = False,
) -> UniformityReport:
    """
    Simulate null samples and summarize |t_hat| fitted on the estimation half.

    Args:
        n: Sample size
        m0: Split fraction
        reps: Replications
        seed: Experiment seed
        interval: Explicit (lower, upper) replacing the default interval on n1
        workers: Worker processes
        progress: Show a progress bar

    Returns:
        UniformityReport; the KS distance is diagnostic and not asserted

    Raises:
        EmptyInterval: If the interval is empty
        DegenerateSplit: If the split leaves an empty part
    """
    _, n1 = SplitConfig(m0=m0).sizes(n)
    region = IntervalA2(*interval) if interval is not None else interval_a2(n1)

    fn = partial(_uniformity_replication, n=n, m0=m0, seed=seed)
    abs_t_hat = np.asarray(
        run_replications(fn, reps, workers=workers, progress=progress, desc="uniformity")
    )

    inside = abs_t_hat[region.contains(abs_t_hat)]
    fraction = inside.size / abs_t_hat.size
    if inside.size == 0:
        ks = 1.0
    else:
        ks = float(kstest(inside, uniform(loc=region.lower, scale=region.width).cdf).statistic)

    logger.info(
        f"Uniformity check n={n}, m0={m0}: {fraction:.3f} inside "
        f"[{region.lower:.4f}, {region.upper:.4f}], KS={ks:.4f}"
    )
    return UniformityReport(
        n=n,
        n1=n1,
        m0=m0,
        reps=reps,
        seed=seed,
        interval=region,
        fraction=fraction,
        ks=ks,
        abs_t_hat=abs_t_hat,
    )
