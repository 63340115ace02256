"""
Reference table loader.

Reads the bundled power tables (one row per published cell) from CSV and
normalizes the cell keys so that simulated reports can be matched against them.
"""

from pathlib import Path
from typing import Any, Tuple, Union
import math

import pandas as pd

from src.error_handler import DataParseError
from src.universal import ThresholdRule

KEY_COLUMNS = ["case", "method", "m0", "rule", "gamma"]


def format_number(value: Any) -> str:
    """Key form of an optional number: '' for missing, otherwise the shortest %g form."""
    if value is None or value == "":
        return ""
    number = float(value)
    if math.isnan(number):
        return ""
    return f"{number:g}"


def cell_key(case: Any, method: Any, m0: Any, rule: Any, gamma: Any) -> Tuple[str, str, str, str, str]:
    """
    Normalized key of one table cell.

    Example:
        >>> cell_key('I', 'lrt', float('nan'), 'asymptotic_lrt', 0.50)
        ('i', 'LRT', '', 'asymptotic_lrt', '0.5')
    """
    return (
        str(case).strip().lower(),
        str(method).strip().upper(),
        format_number(m0),
        str(rule).strip().lower(),
        format_number(gamma),
    )


def normalize_keys(frame: pd.DataFrame) -> pd.Series:
    """Normalized cell keys of every row of a frame holding KEY_COLUMNS."""
    return pd.Series(
        [cell_key(*row) for row in frame[KEY_COLUMNS].itertuples(index=False, name=None)],
        index=frame.index,
    )


class ReferenceTableLoader:
    """
    Reference power table loader.

    Loads the published rejection frequencies from CSV and validates them.
    """

    REQUIRED_COLUMNS = set(KEY_COLUMNS) | {"frequency"}

    @staticmethod
    def load(file_path: Union[str, Path]) -> pd.DataFrame:
        """
        Load reference frequencies from a CSV file.

        Args:
            file_path: CSV file path

        Returns:
            DataFrame with columns case, method, m0, rule, gamma, frequency
            (m0 is NaN for LRT rows), plus a 'key' column of normalized keys

        Raises:
            FileNotFoundError: If the file does not exist
            DataParseError: If the file does not parse as CSV, columns are missing,
                a rule is unknown, a frequency is not a number in [0, 1], or
                keys are duplicated

        CSV format:
            case,method,m0,rule,gamma,frequency
            i,LRT,,asymptotic_lrt,0,0.055
            i,SLRT,0.5,universal,4,0.847
        """
        try:
            if not Path(file_path).exists():
                raise FileNotFoundError(f"Reference table not found: {file_path}")

            try:
                df = pd.read_csv(file_path, encoding="utf-8", dtype={"case": str, "method": str, "rule": str})
            except UnicodeDecodeError:
                raise DataParseError(f"Reference table is not UTF-8 encoded: {file_path}")

            missing = ReferenceTableLoader.REQUIRED_COLUMNS - set(df.columns)
            if missing:
                raise DataParseError(
                    f"{file_path}: Missing required columns: {sorted(missing)}\n"
                    f"Present columns: {sorted(df.columns)}"
                )

            valid_rules = {rule.value for rule in ThresholdRule}
            unknown = set(df["rule"].str.strip().str.lower()) - valid_rules
            if unknown:
                raise DataParseError(f"{file_path}: Unknown threshold rules: {sorted(unknown)}")

            df["frequency"] = pd.to_numeric(df["frequency"], errors="raise")
            out_of_range = df[(df["frequency"] < 0.0) | (df["frequency"] > 1.0)]
            if not out_of_range.empty:
                raise DataParseError(
                    f"{file_path}: Frequencies outside [0, 1] at rows: {out_of_range.index.tolist()}"
                )

            df["key"] = normalize_keys(df)
            duplicated = df[df["key"].duplicated()]
            if not duplicated.empty:
                raise DataParseError(f"{file_path}: Duplicated cells: {duplicated['key'].tolist()}")

            return df.reset_index(drop=True)

        except (FileNotFoundError, DataParseError):
            raise

        except Exception as e:
            # Parser failures (bad quoting, non-numeric frequencies) become DataParseError
            raise DataParseError(f"Failed to load reference table {file_path}: {e}") from e
