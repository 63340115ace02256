"""
Error handling module for the mixtest toolkit.

This module defines the exception hierarchy raised by the statistical core
and maps failures to user-facing messages and CLI exit codes.
"""

from typing import Dict, Union


class HomogeneityError(ValueError):
    """Base class for precondition violations in the testing toolkit."""


class InvalidScenario(HomogeneityError):
    """A scenario resolves to a mixing weight outside [0, 1]."""


class DegenerateSize(HomogeneityError):
    """Sample size too small for a log-log based formula."""


class EmptySample(HomogeneityError):
    """An operation needs at least one observation."""


class TooFewPoints(HomogeneityError):
    """An operation needs more observations than were supplied."""


class DegenerateSplit(HomogeneityError):
    """A data split leaves one of the two parts empty."""


class InvalidLevel(HomogeneityError):
    """Significance level outside its admissible range."""


class InvalidFraction(HomogeneityError):
    """Split fraction outside (0, 1)."""


class EmptyInterval(HomogeneityError):
    """A diagnostic interval has lower >= upper."""


class KeyMismatch(HomogeneityError):
    """Report rows without a counterpart in the reference table."""


class InvalidExperiment(HomogeneityError):
    """Malformed experiment or method specification."""


class ReplicationError(HomogeneityError):
    """A Monte Carlo replication failed; the message names gamma and replication."""


class DataParseError(HomogeneityError):
    """An input data file could not be parsed."""


class ErrorHandler:
    """
    Handler for errors in the command-line workflow.

    Classifies errors and provides:
    - User-friendly error messages
    - Exit codes (2: unusable input, 3: precondition violation)
    - Error context for logs
    """

    # Error type to user message mapping
    ERROR_MESSAGES = {
        "DataParseError": "Input data could not be parsed",
        "FileNotFoundError": "Input file not found",
        "InvalidScenario": "Scenario parameters are outside the model",
        "DegenerateSize": "Sample size too small for this formula",
        "EmptySample": "No observations supplied",
        "TooFewPoints": "Not enough observations for this model",
        "DegenerateSplit": "Split leaves an empty part",
        "InvalidLevel": "Significance level out of range",
        "InvalidFraction": "Split fraction must lie in (0, 1)",
        "EmptyInterval": "Diagnostic interval is empty at this sample size",
        "KeyMismatch": "Report cells have no reference counterpart",
        "InvalidExperiment": "Invalid experiment specification",
        "ReplicationError": "A Monte Carlo replication failed",
    }

    # Error type to exit code mapping (anything else defaults to 3)
    EXIT_CODES = {
        "DataParseError": 2,
        "FileNotFoundError": 2,
    }

    def handle_error(self, error: BaseException) -> Dict[str, Union[str, int]]:
        """
        Handle error and return user-friendly message with exit code.

        Args:
            error: Exception raised by the toolkit

        Returns:
            Dictionary with error handling result:
            - display_message: User-friendly message
            - error_context: Error type plus raw detail
            - exit_code: Process exit code

        Example:
            >>> handler = ErrorHandler()
            >>> result = handler.handle_error(InvalidLevel("alpha=1.5"))
            >>> result['exit_code']
            3
        """
        error_type = type(error).__name__

        display_message = self.ERROR_MESSAGES.get(error_type, "Unexpected error")
        display_message = f"{display_message}: {error}"

        error_context = f"error type: {error_type}\ndetail: {error}"

        return {
            "display_message": display_message,
            "error_context": error_context,
            "exit_code": self.exit_code(error),
        }

    def exit_code(self, error: BaseException) -> int:
        """
        Determine the exit code for an error.

        Args:
            error: Exception raised by the toolkit

        Returns:
            2 for unusable input, 3 for precondition violations

        Example:
            >>> ErrorHandler().exit_code(DataParseError("line 3"))
            2
        """
        return self.EXIT_CODES.get(type(error).__name__, 3)

    def should_abort(self, error: BaseException) -> bool:
        """
        Determine if an error is a tool failure rather than a statistical outcome.

        Args:
            error: Exception raised while running a command

        Returns:
            True for toolkit errors and missing files, False otherwise
        """
        return isinstance(error, (HomogeneityError, FileNotFoundError))
