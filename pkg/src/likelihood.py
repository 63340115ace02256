"""
Likelihood module.

Profile maximization of the mixing weight, the global location search, EM for
the two-mean model, and the classical likelihood ratio statistics.
"""

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple, Union
import logging
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import norm

from src.config import Config
from src.error_handler import EmptySample, TooFewPoints
from src.model import ContaminatedParams, MixtureParams, Sample, TwoMeanParams, as_values

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

_MAX_NEWTON_ITER = 200

# Grid peaks within this distance of the best are refined as well
PEAK_MARGIN = 0.1


@dataclass(frozen=True)
class ProfilePoint:
    """
    Profile maximum of the mixing weight at a fixed location.

    Attributes:
        t: Location
        p_hat: Maximizing weight in [0, 1]
        eta_hat: p_hat * exp(t^2 / 2)
        loglik_gain: 2 * sum log(1 + p_hat Z_i(t)), never negative
        gradient: g'(p_hat), the KKT residual of the weight problem
    """

    t: float
    p_hat: float
    eta_hat: float
    loglik_gain: float
    gradient: float


@dataclass(frozen=True)
class MleResult:
    """
    Outcome of a full-model fit.

    Attributes:
        params: Fitted mixture parameters
        loglik: Full-model log-likelihood at params
        lambda_: Likelihood ratio statistic (>= 0)
        t_hat: Location argmax (contaminated model only)
        converged: Whether the optimizer met its tolerance
        iterations: Refinement or EM iterations used
        null_loglik: Log-likelihood of the fitted null
        trace: EM log-likelihood per iteration (two-mean model only)
    """

    params: MixtureParams
    loglik: float
    lambda_: float
    t_hat: Optional[float]
    converged: bool
    iterations: int
    null_loglik: float
    trace: Optional[np.ndarray] = None


def z_values(data: Union[Sample, ArrayLike], t: float) -> np.ndarray:
    """
    Z_i(t) = exp(t X_i - t^2 / 2) - 1 for every observation.

    Example:
        >>> z_values([1.0], 1.0)
        array([0.64872127])
    """
    x = as_values(data)
    return np.expm1(t * x - 0.5 * t * t)


def location_bound(values: np.ndarray) -> float:
    """
    Half-width T_max of the location search range.

    sqrt(2 ln n) + 1 in general; a single observation uses max(|X_1|, 1) + 1 so
    that its analytic argmax t = X_1 is inside the range.

    Raises:
        EmptySample: If there are no observations
    """
    n = values.size
    if n == 0:
        raise EmptySample("location search needs at least one observation")
    if n == 1:
        return max(abs(float(values[0])), 1.0) + 1.0
    return math.sqrt(2.0 * math.log(n)) + 1.0


def symmetric_grid(bound: float, step: float) -> np.ndarray:
    """
    Grid on [-bound, bound] with spacing at most step, mirror-symmetric and containing 0.
    """
    k = max(1, int(math.ceil(bound / step)))
    positive = np.linspace(0.0, bound, k + 1)
    return np.concatenate((-positive[:0:-1], positive))


def argmax_tiebreak(grid: np.ndarray, values: np.ndarray) -> int:
    """
    Index of the maximum; ties go to the smaller |t|, then to the negative t.
    """
    candidates = np.flatnonzero(values == values.max())
    order = np.lexsort((grid[candidates], np.abs(grid[candidates])))
    return int(candidates[order[0]])


def candidate_peaks(grid: np.ndarray, values: np.ndarray, margin: float = PEAK_MARGIN) -> List[int]:
    """
    Grid indices worth refining: the tie-broken argmax first, then every other
    positive local maximum within margin of it.
    """
    best = argmax_tiebreak(grid, values)
    left = np.r_[-np.inf, values[:-1]]
    right = np.r_[values[1:], -np.inf]
    is_peak = (values >= left) & (values >= right) & (values > 0.0)
    is_peak &= values >= values[best] - margin
    return [best] + [int(i) for i in np.flatnonzero(is_peak) if i != best]


def golden_section_search(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-8
) -> Tuple[float, float, int]:
    """
    Golden-section search for a maximum.

    Given a function f with a single local maximum in [a, b], returns the best
    evaluated point of a final bracket of width <= tol.

    Returns:
        (x, f(x), iterations)

    Example:
        >>> x, fx, _ = golden_section_search(lambda x: -(x - 2) ** 2, 1, 5, 1e-8)
        >>> round(x, 6)
        2.0
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x), 0

    # Required steps to achieve tolerance
    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(steps - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc > yd:
        return c, yc, steps
    return d, yd, steps


def _score_terms(ell: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    z_i / (1 + p z_i) with z_i = exp(ell_i) - 1, evaluated without forming z.

    Positive ell uses (1 - e^-ell) / (1 - u + p u) with u = 1 - e^-ell, which
    tends to 1 / p as ell grows. Requires 0 < p < 1.
    """
    pos = ell > 0.0
    u = -np.expm1(-np.where(pos, ell, 0.0))
    z = np.expm1(np.where(pos, 0.0, ell))
    pc = p[:, None]
    return np.where(pos, u / (1.0 - u + pc * u), z / (1.0 + pc * z))


def _solve_profile(ell: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximize g(p) = sum_i log(1 + p z_i), z_i = exp(ell_i) - 1, over [0, 1]
    for every row of log-ratios ell.

    g is concave, so boundary KKT conditions settle most rows directly:
    g'(0) <= 0 gives p = 0 (including flat rows), g'(1) >= 0 gives p = 1.
    Remaining rows run a safeguarded Newton iteration on g' inside a shrinking
    bracket, falling back to bisection when a step leaves the bracket.

    Returns:
        (p_hat, g'(p_hat)) per row; g'(0) is +inf when some exp(ell_i) overflows
    """
    p_hat = np.zeros(ell.shape[0])
    with np.errstate(over="ignore"):
        z0 = np.expm1(ell)
        grad = z0.sum(axis=1)
        grad_at_one = (-np.expm1(-ell)).sum(axis=1)

    rising = grad > 0.0
    full = rising & (grad_at_one >= 0.0)
    p_hat[full] = 1.0
    grad[full] = grad_at_one[full]

    interior = np.flatnonzero(rising & ~full)
    if interior.size == 0:
        return p_hat, grad

    li = ell[interior]
    lo = np.zeros(interior.size)
    hi = np.ones(interior.size)
    # start from the quadratic approximation g'(0) / -g''(0)
    with np.errstate(over="ignore", invalid="ignore"):
        zi = z0[interior]
        p = grad[interior] / np.einsum("ij,ij->i", zi, zi)
    p = np.where(np.isfinite(p) & (p > 0.0) & (p < 1.0), p, 0.5)
    g_final = np.empty(interior.size)

    active = np.arange(interior.size)
    for _ in range(_MAX_NEWTON_ITER):
        pp = p[active]
        r = _score_terms(li[active], pp)
        g = r.sum(axis=1)
        h = -np.einsum("ij,ij->i", r, r)
        g_final[active] = g

        lo_a = np.where(g > 0.0, pp, lo[active])
        hi_a = np.where(g > 0.0, hi[active], pp)
        lo[active] = lo_a
        hi[active] = hi_a

        done = (np.abs(g) <= tol) | (hi_a - lo_a <= 4.0 * np.finfo(float).eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = pp - g / h
        bad = ~np.isfinite(step) | (step <= lo_a) | (step >= hi_a)
        p[active] = np.where(done, pp, np.where(bad, 0.5 * (lo_a + hi_a), step))

        active = active[~done]
        if active.size == 0:
            break

    p_hat[interior] = p
    grad[interior] = g_final
    return p_hat, grad


def _profile_gain(ell: np.ndarray, p: np.ndarray) -> np.ndarray:
    """2 sum_i log(1 - p + p exp(ell_i)) per row, computed with logaddexp."""
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-p)[:, None]
        log_p = np.log(p)[:, None]
    return 2.0 * np.logaddexp(log_q, log_p + ell).sum(axis=1)


def profile_curve(
    data: Union[Sample, ArrayLike], grid: ArrayLike
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Profile the mixing weight at every grid location.

    The grid is processed in row chunks so that no intermediate array holds
    more than Config.CHUNK_ELEMENTS entries.

    Returns:
        (loglik_gain, p_hat, gradient), one entry per grid point
    """
    x = as_values(data)
    t = np.asarray(grid, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise EmptySample("profile needs at least one observation")

    tol = Config.PROFILE_TOL * n
    rows = max(1, Config.CHUNK_ELEMENTS // n)
    gains = np.empty(t.size)
    weights = np.empty(t.size)
    grads = np.empty(t.size)

    for start in range(0, t.size, rows):
        tc = t[start:start + rows]
        ell = np.outer(tc, x) - 0.5 * (tc * tc)[:, None]
        p, g = _solve_profile(ell, tol)
        gains[start:start + rows] = _profile_gain(ell, p)
        weights[start:start + rows] = p
        grads[start:start + rows] = g

    return gains, weights, grads


def profile_weight(data: Union[Sample, ArrayLike], t: float) -> ProfilePoint:
    """
    Maximize the log-likelihood gain over the mixing weight at location t.

    Args:
        data: Observations
        t: Location

    Returns:
        ProfilePoint; flat objectives (t = 0) return p_hat = 0

    Raises:
        EmptySample: If data is empty

    Example:
        >>> round(profile_weight([2.0], 2.0).loglik_gain, 9)
        4.0
    """
    gains, weights, grads = profile_curve(data, [t])
    p_hat = float(weights[0])
    return ProfilePoint(
        t=float(t),
        p_hat=p_hat,
        eta_hat=p_hat * math.exp(0.5 * t * t),
        loglik_gain=max(float(gains[0]), 0.0),
        gradient=float(grads[0]),
    )


def null_loglik_contaminated(data: Union[Sample, ArrayLike]) -> float:
    """Log-likelihood under the standard normal null (no free parameters)."""
    x = as_values(data)
    return float(norm.logpdf(x).sum())


def null_loglik_two_mean(data: Union[Sample, ArrayLike]) -> float:
    """Log-likelihood under N(mean, 1) with the sample mean plugged in."""
    x = as_values(data)
    if x.size == 0:
        return 0.0
    return float(norm.logpdf(x, loc=x.mean()).sum())


def lrt_contaminated(
    data: Union[Sample, ArrayLike],
    grid_step: Optional[float] = None,
    refine_tol: Optional[float] = None,
) -> MleResult:
    """
    Likelihood ratio statistic for the contaminated model.

    Scans the profile gain on a symmetric grid over |t| <= T_max, then refines
    every grid peak close to the best one by golden-section search on the
    profiled objective.

    Args:
        data: Observations
        grid_step: Grid spacing (default Config.GRID_STEP)
        refine_tol: Location tolerance of the refinement (default Config.REFINE_TOL)

    Returns:
        MleResult with the argmax (p_hat, t_hat) and lambda_ = sup gain

    Raises:
        EmptySample: If data is empty

    Example:
        >>> round(lrt_contaminated([2.0]).lambda_, 9)
        4.0
    """
    x = as_values(data)
    step = grid_step if grid_step is not None else Config.GRID_STEP
    tol = refine_tol if refine_tol is not None else Config.REFINE_TOL

    bound = location_bound(x)
    grid = symmetric_grid(bound, step)
    gains, weights, _ = profile_curve(x, grid)

    best = argmax_tiebreak(grid, gains)
    t_hat = float(grid[best])
    gain = max(float(gains[best]), 0.0)
    p_hat = float(weights[best])
    iterations = 0

    if gain > 0.0:
        spacing = bound / (grid.size // 2)
        for idx in candidate_peaks(grid, gains):
            lo = max(-bound, float(grid[idx]) - spacing)
            hi = min(bound, float(grid[idx]) + spacing)
            t_ref, gain_ref, steps = golden_section_search(
                lambda t: profile_weight(x, t).loglik_gain, lo, hi, tol
            )
            iterations += steps
            if gain_ref > gain:
                point = profile_weight(x, t_ref)
                t_hat, gain, p_hat = point.t, point.loglik_gain, point.p_hat

    null = null_loglik_contaminated(x)
    return MleResult(
        params=ContaminatedParams(p=p_hat, t=t_hat),
        loglik=null + 0.5 * gain,
        lambda_=gain,
        t_hat=t_hat,
        converged=True,
        iterations=iterations,
        null_loglik=null,
    )


def _em_run(
    x: np.ndarray, p: float, t1: float, t2: float, max_iter: int, tol: float
) -> Tuple[TwoMeanParams, float, int, bool, List[float]]:
    """
    EM iterations for (1 - p) N(t1, 1) + p N(t2, 1) from one starting point.

    Returns:
        (params, loglik, iterations, converged, loglik trace)
    """
    n = x.size
    trace: List[float] = []
    converged = False
    iterations = 0

    while True:
        with np.errstate(divide="ignore"):
            log_a = np.log1p(-p) + norm.logpdf(x, loc=t1)
            log_b = np.log(p) + norm.logpdf(x, loc=t2)
        log_f = np.logaddexp(log_a, log_b)
        loglik = float(log_f.sum())
        trace.append(loglik)

        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol:
            converged = True
            break
        if iterations >= max_iter:
            break

        # E-step: posterior weight of the second component
        w = np.exp(log_b - log_f)
        s2 = float(w.sum())
        s1 = float((1.0 - w).sum())

        # M-step (unit variances are fixed)
        p = min(max(s2 / n, 0.0), 1.0)
        if s1 > 0.0:
            t1 = float(((1.0 - w) * x).sum() / s1)
        if s2 > 0.0:
            t2 = float((w * x).sum() / s2)
        iterations += 1

    return TwoMeanParams(p=p, t1=t1, t2=t2), loglik, iterations, converged, trace


def em_fit_two_mean(
    data: Union[Sample, ArrayLike],
    restarts: Optional[int] = None,
    seed: Optional[int] = 0,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> MleResult:
    """
    Fit the two-mean mixture by EM with several starting points.

    The first start splits the data at the median (p = share of the upper
    half, means of both halves); the others draw p from U(0.1, 0.9) and both
    means from U(min - 1, max + 1). The best local maximum is returned with
    labels canonicalized to t1 <= t2.

    Args:
        data: Observations
        restarts: Number of starting points (default Config.EM_RESTARTS)
        seed: Seed for the random starts
        max_iter: EM iteration cap per start (default Config.EM_MAX_ITER)
        tol: Convergence threshold on successive log-likelihoods (default Config.EM_TOL)

    Returns:
        MleResult with the best fit and its loglik trace

    Raises:
        TooFewPoints: If fewer than 2 observations are given
    """
    x = as_values(data)
    n = x.size
    if n < 2:
        raise TooFewPoints(f"two-mean fit needs n >= 2, got n={n}")

    restarts = restarts if restarts is not None else Config.EM_RESTARTS
    max_iter = max_iter if max_iter is not None else Config.EM_MAX_ITER
    tol = tol if tol is not None else Config.EM_TOL

    ordered = np.sort(x)
    half = n // 2
    starts = [((n - half) / n, float(ordered[:half].mean()), float(ordered[half:].mean()))]

    rng = np.random.default_rng(seed)
    lo, hi = float(ordered[0]) - 1.0, float(ordered[-1]) + 1.0
    for _ in range(max(restarts, 1) - 1):
        starts.append((rng.uniform(0.1, 0.9), rng.uniform(lo, hi), rng.uniform(lo, hi)))

    best = None
    for p0, t1, t2 in starts:
        run = _em_run(x, p0, t1, t2, max_iter, tol)
        if best is None or run[1] > best[1]:
            best = run

    params, loglik, iterations, converged, trace = best
    null = null_loglik_two_mean(x)
    return MleResult(
        params=params.canonical(),
        loglik=loglik,
        lambda_=max(2.0 * (loglik - null), 0.0),
        t_hat=None,
        converged=converged,
        iterations=iterations,
        null_loglik=null,
        trace=np.asarray(trace),
    )


def lrt_two_mean(
    data: Union[Sample, ArrayLike],
    restarts: Optional[int] = None,
    seed: Optional[int] = 0,
) -> MleResult:
    """
    Likelihood ratio statistic for the two-mean model.

    The null is N(mean, 1). lambda_ is clamped at 0 (with a warning) when EM
    ends below the null log-likelihood.

    Raises:
        TooFewPoints: If fewer than 2 observations are given
    """
    fit = em_fit_two_mean(data, restarts=restarts, seed=seed)
    raw = 2.0 * (fit.loglik - fit.null_loglik)
    if raw < -1e-9 * max(1.0, abs(fit.null_loglik)):
        logger.warning(
            f"EM fit below the null log-likelihood (lambda={raw:.6g}); clamping to 0"
        )
    return replace(fit, lambda_=max(raw, 0.0))
