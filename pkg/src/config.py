"""
Configuration management module for the mixtest toolkit.

This module loads environment variables (optionally from a .env file) and
exposes the numerical and runtime settings used across the package.
"""

from pathlib import Path
from typing import Union
from dotenv import load_dotenv
import os
import logging
import sys

# Load environment variables from .env file
# Explicitly specify .env path (project root)
# .env file takes precedence over system environment variables
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(dotenv_path=env_path, override=True)

# Configure logging
LOG_DIR = Path(__file__).parent.parent / "logs"
LOG_DIR.mkdir(exist_ok=True)

logging.basicConfig(
    level=getattr(logging, os.getenv("MIXTEST_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(LOG_DIR / 'mixtest.log'),
        logging.StreamHandler(sys.stderr)
    ]
)

logger = logging.getLogger(__name__)


def _parse_int(name: str, default: int) -> int:
    """
    Parse an integer environment variable (invalid values fall back to default).

    Args:
        name: Environment variable name
        default: Value used when the variable is unset or unparsable

    Returns:
        int: Parsed value
    """
    value = os.getenv(name, str(default))
    try:
        return int(value)
    except ValueError:
        logger.warning(f"{name}={value!r} is not an integer, using {default}")
        return default


def _parse_float(name: str, default: float) -> float:
    """
    Parse a float environment variable (invalid values fall back to default).

    Args:
        name: Environment variable name
        default: Value used when the variable is unset or unparsable

    Returns:
        float: Parsed value
    """
    value = os.getenv(name, repr(default))
    try:
        return float(value)
    except ValueError:
        logger.warning(f"{name}={value!r} is not a number, using {default}")
        return default


class Config:
    """
    Application configuration class.

    Loads configuration from environment variables and provides validation methods.
    All paths are absolute.
    """

    # Base directories
    BASE_DIR: Path = Path(__file__).parent.parent.absolute()
    DATA_DIR: Path = BASE_DIR / "data"

    # Testing defaults
    ALPHA: float = _parse_float("MIXTEST_ALPHA", 0.05)

    # Location search
    GRID_STEP: float = _parse_float("MIXTEST_GRID_STEP", 0.02)
    REFINE_TOL: float = _parse_float("MIXTEST_REFINE_TOL", 1e-8)
    PROFILE_TOL: float = _parse_float("MIXTEST_PROFILE_TOL", 1e-10)
    CHUNK_ELEMENTS: int = _parse_int("MIXTEST_CHUNK_ELEMENTS", 4_000_000)

    # Two-mean EM
    EM_RESTARTS: int = _parse_int("MIXTEST_EM_RESTARTS", 10)
    EM_MAX_ITER: int = _parse_int("MIXTEST_EM_MAX_ITER", 500)
    EM_TOL: float = _parse_float("MIXTEST_EM_TOL", 1e-10)

    # Monte Carlo engine
    WORKERS: int = _parse_int("MIXTEST_WORKERS", 1)

    # Bundled fixtures
    # relative values resolve against BASE_DIR (absolute values are kept)
    REFERENCE_PATH: Path = BASE_DIR / os.getenv(
        "MIXTEST_REFERENCE_PATH", str(DATA_DIR / "reference" / "power_tables.csv")
    )

    @classmethod
    def resolve_path(cls, path_input: Union[str, Path]) -> Path:
        """
        Resolve a path relative to the project root unless already absolute.

        Args:
            path_input: Path string or Path object

        Returns:
            Absolute path
        """
        path = Path(path_input)
        if path.is_absolute():
            return path
        else:
            return cls.BASE_DIR / path

    @classmethod
    def validate(cls) -> None:
        """
        Validate configuration settings.

        Raises:
            ValueError: If a setting is out of its admissible range
        """
        if not 0.0 < cls.ALPHA < 1.0:
            raise ValueError(
                f"MIXTEST_ALPHA must lie in (0, 1), got {cls.ALPHA}"
            )

        if cls.GRID_STEP <= 0.0:
            raise ValueError(
                f"MIXTEST_GRID_STEP must be positive, got {cls.GRID_STEP}"
            )

        if cls.REFINE_TOL <= 0.0 or cls.PROFILE_TOL <= 0.0 or cls.EM_TOL <= 0.0:
            raise ValueError("Tolerances (REFINE_TOL, PROFILE_TOL, EM_TOL) must be positive")

        if cls.EM_RESTARTS < 1 or cls.EM_MAX_ITER < 1:
            raise ValueError(
                f"MIXTEST_EM_RESTARTS and MIXTEST_EM_MAX_ITER must be >= 1, "
                f"got {cls.EM_RESTARTS} and {cls.EM_MAX_ITER}"
            )

        if cls.WORKERS < 1:
            raise ValueError(f"MIXTEST_WORKERS must be >= 1, got {cls.WORKERS}")

        if cls.CHUNK_ELEMENTS < 1:
            raise ValueError(f"MIXTEST_CHUNK_ELEMENTS must be >= 1, got {cls.CHUNK_ELEMENTS}")
