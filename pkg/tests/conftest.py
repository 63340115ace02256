"""
Shared fixtures for the mixtest test suite.
"""

from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd
import pytest

from src.model import CaseId
from src.simulation import REPORT_COLUMNS, ExperimentSpec, MethodSpec, SimReport

ROOT = Path(__file__).resolve().parent.parent
REFERENCE_CSV = ROOT / "data" / "reference" / "power_tables.csv"
SCENARIO_DIR = ROOT / "data" / "scenarios"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def null_values(rng: np.random.Generator) -> np.ndarray:
    """200 standard normal draws."""
    return rng.standard_normal(200)


@pytest.fixture
def signal_values(rng: np.random.Generator) -> np.ndarray:
    """1000 draws, half of them shifted by 3."""
    x = rng.standard_normal(1000)
    x[::2] += 3.0
    return x


@pytest.fixture
def data_file(tmp_path: Path) -> Callable[[Sequence[object], str], Path]:
    """Factory writing one value per line into a temporary file."""

    def _write(values: Sequence[object], name: str = "data.txt") -> Path:
        path = tmp_path / name
        path.write_text("\n".join(str(v) for v in values) + "\n", encoding="utf-8")
        return path

    return _write


def make_report(cells: List[Dict[str, object]], reps: int = 1000, case: str = "i") -> SimReport:
    """
    SimReport built from explicit cells (method, m0, rule, gamma, frequency).
    """
    methods: List[MethodSpec] = []
    for cell in cells:
        spec = MethodSpec(str(cell["method"]), cell["m0"], cell["rule"])  # type: ignore[arg-type]
        if spec not in methods:
            methods.append(spec)
    gammas = tuple(sorted({float(cell["gamma"]) for cell in cells}))  # type: ignore[arg-type]
    spec = ExperimentSpec(
        case_id=CaseId(case), n=1000, gamma_list=gammas, methods=tuple(methods), reps=reps
    )

    records = []
    for cell in cells:
        f = float(cell["frequency"])  # type: ignore[arg-type]
        records.append({
            "case": case,
            "method": str(cell["method"]).upper(),
            "m0": cell["m0"] if cell["m0"] is not None else np.nan,
            "rule": cell["rule"],
            "gamma": float(cell["gamma"]),  # type: ignore[arg-type]
            "frequency": f,
            "se": float(np.sqrt(f * (1.0 - f) / reps)),
            "reps": reps,
            "seed": 0,
        })
    rows = pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
    statistics = np.zeros((reps, len(gammas), len(spec.statistic_keys())))
    return SimReport(spec=spec, rows=rows, statistics=statistics)


@pytest.fixture
def report_factory() -> Callable[..., SimReport]:
    return make_report


@pytest.fixture
def reference_csv() -> Path:
    """The bundled reference power tables."""
    return REFERENCE_CSV


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR
