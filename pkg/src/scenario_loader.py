"""
Scenario file loader.

Experiments can be described in small KEY=VALUE files (the same syntax as
.env files) and loaded into an ExperimentSpec.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Union

from dotenv import dotenv_values

from src.error_handler import DataParseError, InvalidExperiment
from src.model import CaseId
from src.simulation import ExperimentSpec, MethodSpec, default_methods


class ScenarioLoader:
    """
    Scenario file loader.

    Keys (CASE is required, everything else optional):
        CASE     i, ii, iii, iv, v or contig
        N        sample size (default 1000)
        GAMMA    comma-separated drift constants (default 0,0.5,1,2,4)
        REPS     replications (default 1000)
        SEED     experiment seed (default 0)
        ALPHA    significance level (default 0.05)
        MU       contiguous-case location (default 1)
        M0       comma-separated split fractions, expanded to both SLRT rules
        METHODS  comma-separated method tokens (lrt, slrt:0.5, slrt:0.5:universal)
    """

    DEFAULT_GAMMAS = (0.0, 0.5, 1.0, 2.0, 4.0)
    KNOWN_KEYS = {"CASE", "N", "GAMMA", "REPS", "SEED", "ALPHA", "MU", "M0", "METHODS"}

    @staticmethod
    def read(file_path: Union[str, Path]) -> Dict[str, str]:
        """
        Read the raw key-value pairs of a scenario file.

        Raises:
            FileNotFoundError: If the file does not exist
            DataParseError: If a key is unknown or has no value
        """
        if not Path(file_path).exists():
            raise FileNotFoundError(f"Scenario file not found: {file_path}")

        raw = dotenv_values(file_path)
        values: Dict[str, str] = {}
        for key, value in raw.items():
            key = key.strip().upper()
            if key not in ScenarioLoader.KNOWN_KEYS:
                raise DataParseError(
                    f"Unknown scenario key: {key} in {file_path}\n"
                    f"Known keys: {sorted(ScenarioLoader.KNOWN_KEYS)}"
                )
            if value is None or not value.strip():
                raise DataParseError(f"{file_path}: scenario key {key} has no value")
            values[key] = value.strip()
        return values

    @staticmethod
    def load(file_path: Union[str, Path], **overrides: Any) -> ExperimentSpec:
        """
        Load a scenario file into an ExperimentSpec.

        Args:
            file_path: Scenario file path
            **overrides: ExperimentSpec fields replacing file values (None is ignored)

        Returns:
            ExperimentSpec

        Raises:
            FileNotFoundError: If the file does not exist
            DataParseError: If a key is unknown or a value does not parse
            InvalidExperiment: If CASE is missing or the values are inconsistent

        File format:
            CASE=i
            N=1000
            GAMMA=0,0.5,1,2,4
            METHODS=lrt,slrt:0.5
        """
        values = ScenarioLoader.read(file_path)
        if "CASE" not in values and overrides.get("case_id") is None:
            raise InvalidExperiment(f"Scenario file {file_path} has no CASE")

        fields: Dict[str, Any] = {}
        try:
            if "CASE" in values:
                fields["case_id"] = CaseId(values["CASE"].lower())
            fields["n"] = _parse(values, "N", int, 1000)
            fields["gamma_list"] = tuple(
                _parse_list(values, "GAMMA", float) or ScenarioLoader.DEFAULT_GAMMAS
            )
            fields["reps"] = _parse(values, "REPS", int, 1000)
            fields["seed"] = _parse(values, "SEED", int, 0)
            fields["alpha"] = _parse(values, "ALPHA", float, 0.05)
            fields["mu"] = _parse(values, "MU", float, 1.0)
        except ValueError as e:
            raise DataParseError(f"Scenario file {file_path}: {e}") from e

        methods: List[MethodSpec] = []
        for token in _parse_list(values, "METHODS", str):
            methods.extend(MethodSpec.parse(token))
        for m0 in _parse_list(values, "M0", str):
            methods.extend(MethodSpec.parse(f"slrt:{m0}"))
        fields["methods"] = tuple(methods) if methods else tuple(default_methods())

        fields.update({key: value for key, value in overrides.items() if value is not None})
        return ExperimentSpec(**fields)


def _parse(values: Dict[str, str], key: str, cast: Callable[[str], Any], default: Any) -> Any:
    if key not in values:
        return default
    try:
        return cast(values[key])
    except ValueError:
        raise DataParseError(f"{key}={values[key]!r} is not a valid {cast.__name__}")


def _parse_list(values: Dict[str, str], key: str, cast: Callable[[str], Any]) -> List[Any]:
    if key not in values:
        return []
    items = [item.strip() for item in values[key].split(",") if item.strip()]
    try:
        return [cast(item) for item in items]
    except ValueError:
        raise DataParseError(f"{key}={values[key]!r} is not a list of {cast.__name__}")
