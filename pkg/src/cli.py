"""
Command-line front end.

Subcommands:
    test        run one test on a data file
    simulate    run a size/power experiment (optionally compared with the reference tables)
    nulldist    simulate the null distribution of a statistic
    thresholds  print the three decision thresholds
    diagnose    empirical process summary of a data file, or the location uniformity check

Exit codes: 0 success (whatever the decision), 1 reference comparison failed,
2 unusable input, 3 precondition violation.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import argparse
import json
import logging
import math
import sys

import numpy as np
import pandas as pd

from src.config import Config
from src.diagnostics import (
    LimitLaw,
    gumbel_standardize_lambda,
    gumbel_standardize_m,
    process_supremum,
    that_uniformity_report,
)
from src.error_handler import DataParseError, DegenerateSize, ErrorHandler
from src.likelihood import lrt_contaminated
from src.methods import MODELS, create_test
from src.model import CaseId
from src.scenario_loader import ScenarioLoader
from src.simulation import (
    REDUCED_REPS_CASE_III,
    ExperimentSpec,
    MethodSpec,
    compare_to_reference,
    default_methods,
    null_distribution,
    run_experiment,
)
from src.universal import (
    MIN_ASYMPTOTIC_N,
    ThresholdRule,
    asymptotic_lrt_threshold,
    asymptotic_slrt_threshold,
    universal_threshold,
)

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "markdown")
DEFAULT_GAMMAS = (0.0, 0.5, 1.0, 2.0, 4.0)
DEFAULT_REPS = 1000


def positive_int(value: str) -> int:
    """argparse type for counts >= 1."""
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {number}")
    return number


def read_data_file(path: str) -> np.ndarray:
    """
    Read one real number per line (blank lines are skipped).

    Raises:
        FileNotFoundError: If the file does not exist
        DataParseError: If a line is not a finite real number
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")

    values: List[float] = []
    try:
        lines = file_path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError:
        raise DataParseError(f"{path} is not UTF-8 encoded")

    for line_num, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            value = float(line)
        except ValueError:
            raise DataParseError(f"{path}, line {line_num}: {line!r} is not a number")
        if not math.isfinite(value):
            raise DataParseError(f"{path}, line {line_num}: {line!r} is not finite")
        values.append(value)
    return np.asarray(values, dtype=float)


def render(frame: pd.DataFrame, fmt: str) -> str:
    """Render a table as CSV, JSON records or a markdown table."""
    if fmt == "csv":
        return frame.to_csv(index=False)
    if fmt == "json":
        records = json.loads(frame.to_json(orient="records", double_precision=15))
        return json.dumps(records, indent=2) + "\n"
    return frame.to_markdown(index=False, floatfmt=".10g") + "\n"


def emit(text: str, output: Optional[str]) -> None:
    """Write text to a file when output is given, else to stdout."""
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output}")
    else:
        sys.stdout.write(text)


def sibling_path(output: str, label: str) -> str:
    path = Path(output)
    return str(path.with_name(f"{path.stem}.{label}{path.suffix}"))


def cmd_test(args: argparse.Namespace) -> int:
    """Run one test on a data file and print the result."""
    data = read_data_file(args.data)
    test = create_test(args.method, args.model, m0=args.m0, shuffle=args.shuffle, seed=args.seed)
    row: Dict[str, Any] = {"method": args.method.upper(), "model": args.model, "n": data.size}

    if args.method == "lrt" and args.rule is None and data.size < MIN_ASYMPTOTIC_N:
        logger.warning(
            f"n={data.size} is below {MIN_ASYMPTOTIC_N}; reporting the statistic without a decision"
        )
        row.update({
            "statistic": test.statistic(data, seed=args.seed),
            "threshold_rule": None,
            "threshold": None,
            "reject": None,
            "e_value": None,
            "alpha": args.alpha,
        })
    else:
        result = test.run(data, args.alpha, rule=args.rule, seed=args.seed)
        row.update({
            "statistic": result.statistic,
            "threshold_rule": result.threshold_rule.value,
            "threshold": result.threshold,
            "reject": result.reject,
            "e_value": result.e_value,
            "alpha": result.alpha,
        })

    emit(render(pd.DataFrame([row]), args.format), args.output)
    return 0


def build_experiment(args: argparse.Namespace) -> ExperimentSpec:
    """Experiment from a scenario file and/or flags (flags win)."""
    methods = None
    if args.methods:
        methods = tuple(spec for token in args.methods for spec in MethodSpec.parse(token))

    overrides: Dict[str, Any] = {
        "case_id": CaseId(args.case) if args.case else None,
        "n": args.n,
        "gamma_list": tuple(args.gamma) if args.gamma else None,
        "methods": methods,
        "reps": args.reps,
        "seed": args.seed,
        "alpha": args.alpha,
        "mu": args.mu,
        "em_restarts": args.em_restarts,
    }
    if args.config:
        spec = ScenarioLoader.load(Config.resolve_path(args.config), **overrides)
    else:
        if args.case is None:
            raise argparse.ArgumentTypeError("--case is required without --config")
        case_id = CaseId(args.case)
        reps = args.reps
        if reps is None:
            reps = REDUCED_REPS_CASE_III if case_id is CaseId.III and not args.full else DEFAULT_REPS
        spec = ExperimentSpec(
            case_id=case_id,
            n=args.n if args.n is not None else 1000,
            gamma_list=tuple(args.gamma) if args.gamma else DEFAULT_GAMMAS,
            methods=methods if methods else tuple(default_methods()),
            reps=reps,
            alpha=args.alpha if args.alpha is not None else Config.ALPHA,
            seed=args.seed if args.seed is not None else 0,
            mu=args.mu if args.mu is not None else 1.0,
            em_restarts=args.em_restarts,
        )

    if spec.case_id is CaseId.III and not args.full:
        logger.info(f"Case iii runs {spec.reps} replications (use --full for the complete run)")
    return spec


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run an experiment; with --compare, exit 1 iff any cell falls outside its band."""
    spec = build_experiment(args)
    report = run_experiment(spec, workers=args.workers, progress=args.progress)

    verdicts = None
    if args.compare:
        reference = Config.resolve_path(args.reference) if args.reference else None
        verdicts = compare_to_reference(report, reference)

    if args.format == "json":
        emit(report.to_json(verdicts=verdicts) + "\n", args.output)
    else:
        text = render(report.to_frame(), args.format)
        if verdicts is None:
            emit(text, args.output)
        elif args.output:
            emit(text, args.output)
            emit(render(verdicts, args.format), sibling_path(args.output, "verdicts"))
        else:
            emit(text + "\n" + render(verdicts, args.format), None)

    if verdicts is not None and not bool(verdicts["passed"].all()):
        return 1
    return 0


def cmd_nulldist(args: argparse.Namespace) -> int:
    """Simulate a null distribution; CSV holds rep, statistic, standardized."""
    result = null_distribution(
        args.kind,
        model=args.model,
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        m0=args.m0 if args.kind == LimitLaw.SLRT.value else None,
        alpha=args.alpha,
        workers=args.workers,
        progress=args.progress,
    )
    if args.summary:
        result.to_json(Config.resolve_path(args.summary))
    if args.format == "json":
        emit(result.to_json() + "\n", args.output)
    else:
        emit(render(result.frame, args.format), args.output)
    return 0


def cmd_thresholds(args: argparse.Namespace) -> int:
    """Print universal, asymptotic LRT and asymptotic SLRT thresholds per m0."""
    universal = universal_threshold(args.alpha)
    try:
        lrt: Optional[float] = asymptotic_lrt_threshold(args.n, args.alpha)
    except DegenerateSize as e:
        logger.warning(f"Asymptotic thresholds refused: {e}")
        lrt = None

    rows = []
    for m0 in args.m0:
        slrt = asymptotic_slrt_threshold(args.n, args.alpha, m0) if lrt is not None else None
        rows.append({
            "n": args.n,
            "alpha": args.alpha,
            "m0": m0,
            ThresholdRule.UNIVERSAL.value: universal,
            ThresholdRule.ASYMPTOTIC_LRT.value: lrt,
            ThresholdRule.ASYMPTOTIC_SLRT.value: slrt,
        })
    emit(render(pd.DataFrame(rows), args.format), args.output)
    return 0


def cmd_diagnose_process(args: argparse.Namespace) -> int:
    """Supremum of the empirical process next to the likelihood ratio statistic."""
    data = read_data_file(args.data)
    curve = process_supremum(data)
    fit = lrt_contaminated(data)
    row: Dict[str, Any] = {
        "n": data.size,
        "m_n": curve.m_n,
        "t_star": curve.t_star,
        "m_n_squared": curve.m_n ** 2,
        "lambda": fit.lambda_,
        "t_hat": fit.t_hat,
        "gumbel_m": None,
        "gumbel_lambda": None,
    }
    if data.size >= MIN_ASYMPTOTIC_N:
        row["gumbel_m"] = gumbel_standardize_m(curve.m_n, data.size)
        row["gumbel_lambda"] = gumbel_standardize_lambda(fit.lambda_, data.size)
    emit(render(pd.DataFrame([row]), args.format), args.output)
    return 0


def cmd_diagnose_uniformity(args: argparse.Namespace) -> int:
    """Fraction of |t_hat| inside the uniformity interval, with the KS distance."""
    interval = None
    if args.lower is not None or args.upper is not None:
        if args.lower is None or args.upper is None:
            raise argparse.ArgumentTypeError("--lower and --upper go together")
        interval = (args.lower, args.upper)
    report = that_uniformity_report(
        args.n, args.m0, args.reps, args.seed,
        interval=interval,
        workers=args.workers if args.workers is not None else Config.WORKERS,
        progress=args.progress,
    )
    if args.format == "json":
        emit(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    else:
        emit(render(pd.DataFrame([report.to_dict()]), args.format), args.output)
    return 0


def _add_output_flags(parser: argparse.ArgumentParser, default_format: str = "csv") -> None:
    parser.add_argument("--format", choices=FORMATS, default=default_format, help="output format")
    parser.add_argument("--output", help="write to this file instead of stdout")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=positive_int, default=None,
                        help=f"worker processes (default {Config.WORKERS})")
    parser.add_argument("--progress", action="store_true", help="show a progress bar")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixtest",
        description="Likelihood ratio and split likelihood ratio tests for homogeneity in Gaussian mixtures",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # test
    p = subparsers.add_parser("test", help="run one test on a data file")
    p.add_argument("data", help="file with one real number per line")
    p.add_argument("--model", choices=MODELS, default="contaminated")
    p.add_argument("--method", choices=("lrt", "slrt"), default="lrt")
    p.add_argument("--m0", type=float, default=0.5, help="split fraction (SLRT)")
    p.add_argument("--alpha", type=float, default=Config.ALPHA)
    p.add_argument("--rule", choices=[rule.value for rule in ThresholdRule], default=None)
    p.add_argument("--shuffle", action="store_true", help="shuffle before splitting (SLRT)")
    p.add_argument("--seed", type=int, default=0, help="shuffle and EM seed")
    _add_output_flags(p, "markdown")
    p.set_defaults(func=cmd_test)

    # simulate
    p = subparsers.add_parser("simulate", help="run a size/power experiment")
    p.add_argument("--case", choices=[case.value for case in CaseId])
    p.add_argument("--config", help="scenario file (KEY=VALUE); flags override it")
    p.add_argument("--n", type=positive_int)
    p.add_argument("--gamma", type=float, nargs="+", help="drift constants (default 0 0.5 1 2 4)")
    p.add_argument("--reps", type=positive_int, help="replications (default 1000, 200 for case iii)")
    p.add_argument("--methods", nargs="+", help="lrt, slrt:M0 or slrt:M0:RULE")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--mu", type=float, help="location of the contiguous case")
    p.add_argument("--em-restarts", type=positive_int, dest="em_restarts")
    p.add_argument("--full", action="store_true", help="full replication count for case iii")
    p.add_argument("--compare", action="store_true", help="compare against the reference tables")
    p.add_argument("--reference", help=f"reference CSV (default {Config.REFERENCE_PATH})")
    _add_run_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    # nulldist
    p = subparsers.add_parser("nulldist", help="simulate a null distribution")
    p.add_argument("--kind", choices=[kind.value for kind in LimitLaw], required=True)
    p.add_argument("--model", choices=MODELS, default="contaminated")
    p.add_argument("--n", type=positive_int, default=1000)
    p.add_argument("--reps", type=positive_int, default=DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m0", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=Config.ALPHA)
    p.add_argument("--summary", help="write the JSON summary to this file")
    _add_run_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_nulldist)

    # thresholds
    p = subparsers.add_parser("thresholds", help="print decision thresholds")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--alpha", type=float, default=Config.ALPHA)
    p.add_argument("--m0", type=float, nargs="+", default=[0.4, 0.5, 0.6])
    _add_output_flags(p, "markdown")
    p.set_defaults(func=cmd_thresholds)

    # diagnose
    p = subparsers.add_parser("diagnose", help="distributional diagnostics")
    modes = p.add_subparsers(dest="mode", required=True)

    q = modes.add_parser("process", help="empirical process supremum of a data file")
    q.add_argument("data", help="file with one real number per line")
    _add_output_flags(q, "markdown")
    q.set_defaults(func=cmd_diagnose_process)

    q = modes.add_parser("uniformity", help="uniformity of |t_hat| on the estimation half")
    q.add_argument("--n", type=positive_int, required=True)
    q.add_argument("--m0", type=float, default=0.5)
    q.add_argument("--reps", type=positive_int, default=DEFAULT_REPS)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--lower", type=float, help="explicit interval lower end")
    q.add_argument("--upper", type=float, help="explicit interval upper end")
    _add_run_flags(q)
    _add_output_flags(q, "json")
    q.set_defaults(func=cmd_diagnose_uniformity)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the subcommand and map failures to exit codes.

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        Config.validate()
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"Invalid configuration: {e}", file=sys.stderr)
        return 3

    handler = ErrorHandler()
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))
    except Exception as e:
        if not handler.should_abort(e):
            raise
        result = handler.handle_error(e)
        logger.error(result["error_context"])
        print(result["display_message"], file=sys.stderr)
        return int(result["exit_code"])
    return 0
