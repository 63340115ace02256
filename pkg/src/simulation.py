"""
Monte Carlo simulation module.

Runs size/power experiments over a list of drift constants with a paired
design (every method sees the same sample within a replication), compares
reports against reference tables, and simulates null distributions of the
test statistics.
"""

from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import json
import logging
import math
import time

import numpy as np
import pandas as pd

from src.config import Config
from src.diagnostics import LimitLaw, ks_to_limit, process_supremum, standardize
from src.error_handler import (
    HomogeneityError,
    InvalidExperiment,
    KeyMismatch,
    ReplicationError,
)
from src.methods import HomogeneityTest, create_test
from src.model import AlternativeScenario, CaseId, resolve_scenario, sample
from src.reference_loader import ReferenceTableLoader, normalize_keys
from src.replication import child_seed, replication_seed, run_replications
from src.universal import (
    ThresholdRule,
    check_asymptotic_size,
    check_fraction,
    check_level,
    universal_threshold,
)

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["case", "method", "m0", "rule", "gamma", "frequency", "se", "reps", "seed"]

# Auxiliary random streams inside one replication
EM_STREAM = 1

# Replication count used for case iii unless a full run is requested
REDUCED_REPS_CASE_III = 200


@dataclass(frozen=True)
class MethodSpec:
    """
    One (method, m0, threshold rule) column of an experiment.

    Attributes:
        method: 'LRT' or 'SLRT'
        m0: Split fraction (SLRT only)
        rule: Threshold rule
    """

    method: str
    m0: Optional[float]
    rule: ThresholdRule

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", self.method.upper())
        object.__setattr__(self, "rule", ThresholdRule(self.rule))
        if self.method == "LRT":
            if self.m0 is not None:
                raise InvalidExperiment("LRT takes no split fraction")
            if self.rule is not ThresholdRule.ASYMPTOTIC_LRT:
                raise InvalidExperiment(f"LRT cannot use the {self.rule.value} rule")
        elif self.method == "SLRT":
            if self.m0 is None:
                raise InvalidExperiment("SLRT needs a split fraction m0")
            check_fraction(self.m0)
            if self.rule is ThresholdRule.ASYMPTOTIC_LRT:
                raise InvalidExperiment("SLRT cannot use the asymptotic_lrt rule")
        else:
            raise InvalidExperiment(f"Unsupported method: {self.method}")

    @property
    def statistic_key(self) -> Tuple[str, Optional[float]]:
        """Methods sharing this key share one statistic per replication."""
        return self.method, self.m0

    @classmethod
    def parse(cls, token: str) -> List["MethodSpec"]:
        """
        Parse a method token.

        'lrt' gives the LRT column; 'slrt:M0' gives both SLRT rules for that
        split; 'slrt:M0:RULE' gives a single column.

        Raises:
            InvalidExperiment: If the token is malformed

        Example:
            >>> [m.rule.value for m in MethodSpec.parse('slrt:0.5')]
            ['universal', 'asymptotic_slrt']
        """
        parts = [part.strip() for part in token.strip().split(":")]
        method = parts[0].upper()
        try:
            if method == "LRT" and len(parts) == 1:
                return [cls("LRT", None, ThresholdRule.ASYMPTOTIC_LRT)]
            if method == "SLRT" and len(parts) in (2, 3):
                m0 = float(parts[1])
                if len(parts) == 3:
                    return [cls("SLRT", m0, ThresholdRule(parts[2].lower()))]
                return [
                    cls("SLRT", m0, ThresholdRule.UNIVERSAL),
                    cls("SLRT", m0, ThresholdRule.ASYMPTOTIC_SLRT),
                ]
        except ValueError as e:
            if isinstance(e, HomogeneityError):
                raise
            raise InvalidExperiment(f"Malformed method token {token!r}: {e}")
        raise InvalidExperiment(
            f"Malformed method token {token!r}; expected lrt, slrt:M0 or slrt:M0:RULE"
        )


DEFAULT_METHOD_TOKENS = ("lrt", "slrt:0.4", "slrt:0.5", "slrt:0.6")


def default_methods() -> List[MethodSpec]:
    return [spec for token in DEFAULT_METHOD_TOKENS for spec in MethodSpec.parse(token)]


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A size/power experiment.

    Attributes:
        case_id: Simulation case
        n: Sample size
        gamma_list: Drift constants
        methods: Method columns
        reps: Replications
        alpha: Significance level
        seed: Experiment seed
        mu: Location of the contiguous case
        em_restarts: EM starting points (default Config.EM_RESTARTS)
    """

    case_id: CaseId
    n: int
    gamma_list: Tuple[float, ...]
    methods: Tuple[MethodSpec, ...]
    reps: int = 1000
    alpha: float = 0.05
    seed: int = 0
    mu: float = 1.0
    em_restarts: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "case_id", CaseId(self.case_id))
        object.__setattr__(self, "gamma_list", tuple(float(g) for g in self.gamma_list))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.reps < 1:
            raise InvalidExperiment(f"reps must be >= 1, got {self.reps}")
        if not self.gamma_list:
            raise InvalidExperiment("gamma_list must not be empty")
        if not self.methods:
            raise InvalidExperiment("at least one method is required")
        if self.seed < 0:
            raise InvalidExperiment(f"seed must be non-negative, got {self.seed}")
        check_level(self.alpha)

    @property
    def model(self) -> str:
        return "two-mean" if self.case_id.two_mean else "contaminated"

    @property
    def scenario(self) -> AlternativeScenario:
        """Scenario template; each gamma is applied with with_gamma."""
        return AlternativeScenario(case_id=self.case_id, gamma=0.0, n=self.n, mu=self.mu)

    def statistic_keys(self) -> List[Tuple[str, Optional[float]]]:
        keys: List[Tuple[str, Optional[float]]] = []
        for method in self.methods:
            if method.statistic_key not in keys:
                keys.append(method.statistic_key)
        return keys


@dataclass
class SimReport:
    """
    Rejection frequencies of an experiment.

    Attributes:
        spec: The experiment
        rows: One row per (method, m0, rule, gamma) with REPORT_COLUMNS
        statistics: Statistics of shape (reps, len(gamma_list), len(statistic_keys))
        thresholds: Threshold per method column
        wall_time: Seconds spent (excluded from CSV output)
    """

    spec: ExperimentSpec
    rows: pd.DataFrame
    statistics: np.ndarray = field(repr=False)
    thresholds: List[float] = field(default_factory=list)
    wall_time: float = 0.0

    def statistics_for(self, method: str, m0: Optional[float], gamma: float) -> np.ndarray:
        """Per-replication statistics of one method at one gamma."""
        keys = self.spec.statistic_keys()
        k = keys.index((method.upper(), m0))
        g = self.spec.gamma_list.index(float(gamma))
        return self.statistics[:, g, k]

    def to_frame(self) -> pd.DataFrame:
        return self.rows.copy()

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        """CSV text of the rows (written to path when given)."""
        text = self.rows.to_csv(index=False)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def to_dict(self, verdicts: Optional[pd.DataFrame] = None) -> Dict[str, Any]:
        spec = self.spec
        summary: Dict[str, Any] = {
            "case": spec.case_id.value,
            "n": spec.n,
            "reps": spec.reps,
            "alpha": spec.alpha,
            "seed": spec.seed,
            "wall_time": self.wall_time,
            "rows": json.loads(self.rows.to_json(orient="records", double_precision=15)),
        }
        if spec.case_id in (CaseId.I, CaseId.II, CaseId.III, CaseId.CONTIG):
            summary["limits"] = [
                limiting_power(spec.case_id, m.method, m.rule, g, spec.alpha, m.m0)
                for m in spec.methods for g in spec.gamma_list
            ]
        if verdicts is not None:
            summary["verdicts"] = json.loads(verdicts.to_json(orient="records", double_precision=15))
        return summary

    def to_json(
        self, path: Optional[Union[str, Path]] = None, verdicts: Optional[pd.DataFrame] = None
    ) -> str:
        """JSON summary mirroring the CSV rows, with verdicts when compared."""
        text = json.dumps(self.to_dict(verdicts), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _build_tests(spec: ExperimentSpec) -> List[HomogeneityTest]:
    return [
        create_test(
            method, spec.model, m0=m0 if m0 is not None else 0.5, restarts=spec.em_restarts
        )
        for method, m0 in spec.statistic_keys()
    ]


def _replicate(r: int, spec: ExperimentSpec) -> np.ndarray:
    """
    Statistics of every method at every gamma for replication r.

    All gammas reuse the replication's seed, so the samples differ only
    through the mixing parameters.
    """
    tests = _build_tests(spec)
    seed = replication_seed(spec.seed, r)
    em_seed = child_seed(spec.seed, r, EM_STREAM)
    out = np.empty((len(spec.gamma_list), len(tests)))

    for g, gamma in enumerate(spec.gamma_list):
        try:
            data = sample(spec.scenario.with_gamma(gamma), seed)
            for k, test in enumerate(tests):
                out[g, k] = test.statistic(data, seed=em_seed)
        except HomogeneityError as e:
            logger.error(f"Replication failed at gamma={gamma}, r={r}: {e}")
            raise ReplicationError(f"gamma={gamma}, r={r}: {type(e).__name__}: {e}") from e
    return out


def run_experiment(
    spec: ExperimentSpec, workers: Optional[int] = None, progress: bool = False
) -> SimReport:
    """
    Run a size/power experiment.

    Replication r draws its sample from the stream (seed, r), evaluates every
    method on it, and the rejection frequencies are aggregated afterwards, so
    the report does not depend on the worker count.

    Args:
        spec: Experiment
        workers: Worker processes (default Config.WORKERS)
        progress: Show a progress bar

    Returns:
        SimReport

    Raises:
        InvalidScenario: If a gamma resolves outside the model
        DegenerateSize: If an asymptotic rule is used with n < 16
        ReplicationError: If a replication fails (message names gamma and r)
    """
    workers = workers if workers is not None else Config.WORKERS

    # fail before spending any replications
    for gamma in spec.gamma_list:
        resolve_scenario(spec.scenario.with_gamma(gamma))
    tests = _build_tests(spec)
    keys = spec.statistic_keys()
    thresholds = [
        tests[keys.index(m.statistic_key)].threshold(spec.n, spec.alpha, m.rule)
        for m in spec.methods
    ]

    logger.info(
        f"Experiment case={spec.case_id.value}, n={spec.n}, reps={spec.reps}, "
        f"gammas={list(spec.gamma_list)}, methods={len(spec.methods)}, workers={workers}"
    )
    started = time.perf_counter()
    results = run_replications(
        partial(_replicate, spec=spec), spec.reps, workers=workers,
        progress=progress, desc=f"case {spec.case_id.value}",
    )
    statistics = np.stack(results)
    wall_time = time.perf_counter() - started
    logger.info(f"Experiment finished in {wall_time:.1f}s")

    records = []
    for m, method in enumerate(spec.methods):
        k = keys.index(method.statistic_key)
        for g, gamma in enumerate(spec.gamma_list):
            rejections = int(np.count_nonzero(statistics[:, g, k] > thresholds[m]))
            frequency = rejections / spec.reps
            records.append({
                "case": spec.case_id.value,
                "method": method.method,
                "m0": method.m0 if method.m0 is not None else np.nan,
                "rule": method.rule.value,
                "gamma": gamma,
                "frequency": frequency,
                "se": math.sqrt(frequency * (1.0 - frequency) / spec.reps),
                "reps": spec.reps,
                "seed": spec.seed,
            })

    rows = pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
    return SimReport(
        spec=spec, rows=rows, statistics=statistics, thresholds=thresholds, wall_time=wall_time
    )


def mc_tolerance(frequency: float, reps: int, k: float = 3.0) -> float:
    """
    Half-width k * sqrt(f (1 - f) / reps) of a Monte Carlo acceptance band.

    Example:
        >>> round(mc_tolerance(0.5, 1000), 6)
        0.047434
    """
    frequency = min(max(float(frequency), 0.0), 1.0)
    return k * math.sqrt(frequency * (1.0 - frequency) / reps)


def compare_to_reference(
    report: SimReport,
    reference: Union[pd.DataFrame, str, Path, None] = None,
    k: float = 3.0,
) -> pd.DataFrame:
    """
    Per-cell verdicts of a report against a reference table.

    A cell passes iff |observed - reference| is within the sum of both
    Monte Carlo bands at the report's replication count.

    Args:
        report: Simulated report
        reference: Reference DataFrame or CSV path (default Config.REFERENCE_PATH)
        k: Band multiplier

    Returns:
        DataFrame with columns case, method, m0, rule, gamma, observed,
        reference, tolerance, passed

    Raises:
        KeyMismatch: If report cells have no reference counterpart
    """
    if reference is None:
        reference = Config.REFERENCE_PATH
    if not isinstance(reference, pd.DataFrame):
        reference = ReferenceTableLoader.load(reference)

    lookup = dict(zip(normalize_keys(reference), reference["frequency"]))
    rows = report.rows
    keys = normalize_keys(rows)

    missing = [key for key in keys if key not in lookup]
    if missing:
        raise KeyMismatch(f"{len(missing)} cells missing from reference, e.g. {missing[0]}")

    verdicts = rows[["case", "method", "m0", "rule", "gamma"]].copy()
    verdicts["observed"] = rows["frequency"]
    verdicts["reference"] = [float(lookup[key]) for key in keys]
    verdicts["tolerance"] = [
        mc_tolerance(ref, reps, k) + mc_tolerance(obs, reps, k)
        for ref, obs, reps in zip(verdicts["reference"], verdicts["observed"], rows["reps"])
    ]
    verdicts["passed"] = (verdicts["observed"] - verdicts["reference"]).abs() <= verdicts["tolerance"]

    failed = int((~verdicts["passed"]).sum())
    if failed:
        logger.warning(f"{failed} of {len(verdicts)} cells outside their Monte Carlo bands")
    return verdicts


def trend_violations(report: Union[SimReport, pd.DataFrame], k: float = 2.0) -> pd.DataFrame:
    """
    Pairs of cells where power drops as |gamma| grows beyond pooled bands.

    Within each (method, m0, rule) row, a pair with |gamma_a| < |gamma_b| is a
    violation when f_b + k se_b < f_a - k se_a.

    Returns:
        DataFrame with columns method, m0, rule, gamma_low, gamma_high,
        frequency_low, frequency_high (empty when the trend holds)
    """
    rows = report.rows if isinstance(report, SimReport) else report
    found = []
    for (method, m0, rule), group in rows.groupby(["method", "m0", "rule"], dropna=False, sort=False):
        ordered = group.assign(abs_gamma=group["gamma"].abs()).sort_values("abs_gamma")
        cells = list(ordered.itertuples(index=False))
        for i, low in enumerate(cells):
            for high in cells[i + 1:]:
                if high.abs_gamma == low.abs_gamma:
                    continue
                if high.frequency + k * high.se < low.frequency - k * low.se:
                    found.append({
                        "method": method,
                        "m0": m0,
                        "rule": rule,
                        "gamma_low": low.gamma,
                        "gamma_high": high.gamma,
                        "frequency_low": low.frequency,
                        "frequency_high": high.frequency,
                    })
    return pd.DataFrame(
        found,
        columns=["method", "m0", "rule", "gamma_low", "gamma_high", "frequency_low", "frequency_high"],
    )


def limiting_power(
    case_id: Union[CaseId, str],
    method: str,
    rule: Union[ThresholdRule, str],
    gamma: float,
    alpha: float,
    m0: Optional[float] = None,
) -> float:
    """
    Asymptotic local power of a test along a contaminated alternative sequence.

    On the detection-boundary sequences (cases i-iii) the LRT switches at
    |gamma| = 1 and the SLRT at |gamma| = m1^{-1/2}: below the switch the power
    tends to alpha (0 for the universal threshold), at it to (1 + alpha) / 2
    (1/2 for the universal threshold), and above it to 1. Along the contiguous
    sequence no test separates: LRT and SLRT with the asymptotic threshold
    tend to alpha, SLRT with the universal threshold to 0.

    Raises:
        InvalidExperiment: For the two-mean cases or a missing m0
    """
    case_id = CaseId(case_id)
    method = method.upper()
    rule = ThresholdRule(rule)
    if case_id.two_mean:
        raise InvalidExperiment(f"no local power limit for case {case_id.value}")

    universal = method == "SLRT" and rule is ThresholdRule.UNIVERSAL
    if case_id is CaseId.CONTIG:
        return 0.0 if universal else alpha

    if method == "LRT":
        boundary = 1.0
    else:
        if m0 is None:
            raise InvalidExperiment("SLRT limit needs m0")
        boundary = 1.0 / math.sqrt(1.0 - m0)

    magnitude = abs(gamma)
    if math.isclose(magnitude, boundary, rel_tol=1e-12):
        return 0.5 if universal else (1.0 + alpha) / 2.0
    if magnitude > boundary:
        return 1.0
    return 0.0 if universal else alpha


def e_value_summary(statistics: Sequence[float]) -> Dict[str, float]:
    """
    Mean of exp(lambda_split / 2) with its Monte Carlo standard error.

    Returns:
        Dictionary with mean, se, reps and within_bound (mean <= 1 + 3 se)
    """
    e_values = np.exp(0.5 * np.asarray(statistics, dtype=float))
    reps = e_values.size
    mean = float(e_values.mean())
    se = float(e_values.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return {"mean": mean, "se": se, "reps": reps, "within_bound": bool(mean <= 1.0 + 3.0 * se)}


@dataclass
class NullDistribution:
    """
    Simulated null distribution of one statistic.

    Attributes:
        frame: Columns rep, statistic, standardized
        summary: KS distance to the limit law and, for SLRT, e-value and
            universal-threshold summaries
    """

    frame: pd.DataFrame
    summary: Dict[str, Any]

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.frame.to_csv(index=False)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        text = json.dumps(self.summary, indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _null_replication(
    r: int, kind: LimitLaw, model: str, n: int, seed: int, m0: Optional[float]
) -> float:
    case_id = CaseId.IV if model == "two-mean" else CaseId.I
    data = sample(AlternativeScenario(case_id=case_id, gamma=0.0, n=n), replication_seed(seed, r))
    if kind is LimitLaw.SUPREMUM:
        return process_supremum(data).m_n
    method = "lrt" if kind is LimitLaw.LRT else "slrt"
    test = create_test(method, model, m0=m0 if m0 is not None else 0.5)
    return test.statistic(data, seed=child_seed(seed, r, EM_STREAM))


def null_distribution(
    kind: Union[LimitLaw, str],
    model: str = "contaminated",
    n: int = 1000,
    reps: int = 1000,
    seed: int = 0,
    m0: Optional[float] = None,
    alpha: float = 0.05,
    workers: Optional[int] = None,
    progress: bool = False,
) -> NullDistribution:
    """
    Simulate a statistic under the null and standardize it against its limit law.

    Args:
        kind: 'supremum' (M_n), 'lrt' (lambda_n) or 'slrt' (lambda_split)
        model: 'contaminated' or 'two-mean' (the supremum is contaminated only)
        n: Sample size (>= 16)
        reps: Replications
        seed: Experiment seed
        m0: Split fraction (SLRT only)
        alpha: Level for the universal-threshold rejection rate (SLRT only)
        workers: Worker processes (default Config.WORKERS)
        progress: Show a progress bar

    Returns:
        NullDistribution

    Raises:
        DegenerateSize: If n < 16
        InvalidExperiment: If the combination is not supported
    """
    kind = LimitLaw(kind)
    check_asymptotic_size(n)
    if reps < 1:
        raise InvalidExperiment(f"reps must be >= 1, got {reps}")
    if kind is LimitLaw.SUPREMUM and model != "contaminated":
        raise InvalidExperiment("the empirical process supremum is defined for the contaminated model")
    if kind is LimitLaw.SLRT:
        if m0 is None:
            raise InvalidExperiment("SLRT null distribution needs m0")
        check_fraction(m0)
    workers = workers if workers is not None else Config.WORKERS

    fn = partial(_null_replication, kind=kind, model=model, n=n, seed=seed, m0=m0)
    statistics = np.asarray(
        run_replications(fn, reps, workers=workers, progress=progress, desc=f"null {kind.value}")
    )
    standardized = np.array([standardize(kind, value, n, m0) for value in statistics])

    frame = pd.DataFrame({
        "rep": np.arange(reps),
        "statistic": statistics,
        "standardized": standardized,
    })
    summary: Dict[str, Any] = {
        "kind": kind.value,
        "model": model,
        "n": n,
        "reps": reps,
        "seed": seed,
        "m0": m0,
        "ks": ks_to_limit(kind, standardized),
    }
    if kind is LimitLaw.SLRT:
        summary["e_value"] = e_value_summary(statistics)
        summary["universal_rejection_rate"] = float(
            np.count_nonzero(statistics > universal_threshold(alpha)) / reps
        )
    logger.info(f"Null distribution {kind.value} (n={n}, reps={reps}): KS={summary['ks']:.4f}")
    return NullDistribution(frame=frame, summary=summary)
