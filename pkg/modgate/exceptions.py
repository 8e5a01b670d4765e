"""modgate exception hierarchy and error handling utilities.

This module provides a standardized exception hierarchy for modgate and the
error handling decorator used by CLI commands, so that numerical failures,
bad configuration and usage mistakes all surface as a one-line message and
the documented exit code (1 usage, 2 numerical/config failure).
"""

import functools
import logging
from collections.abc import Callable, Generator
from contextlib import contextmanager
from typing import Any, TypeVar

import typer
from rich.console import Console

logger = logging.getLogger(__name__)
console = Console(stderr=True)

T = TypeVar("T", bound=Callable[..., Any])

EXIT_USAGE = 1
EXIT_FAILURE = 2


class ModgateError(Exception):
    """Base exception for all modgate errors.

    All modgate-specific exceptions inherit from this class so callers can
    catch the whole family while still handling specific failures.
    """

    def __init__(
        self, message: str, exit_code: int = EXIT_FAILURE, details: str | None = None
    ):
        """Initialize ModgateError.

        Args:
            message: The error message to display
            exit_code: Exit code for CLI (default: 2)
            details: Additional details about the error (optional)
        """
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details

    def __str__(self) -> str:
        """Return string representation of the error."""
        if self.details:
            return f"{self.message}\nDetails: {self.details}"
        return self.message


class UsageError(ModgateError):
    """Invalid command-line usage, such as an unknown method name."""

    def __init__(self, message: str, option: str | None = None):
        details = f"Option: {option}" if option else None
        super().__init__(message, exit_code=EXIT_USAGE, details=details)


class ConfigurationError(ModgateError):
    """Configuration-related errors.

    Raised when the experiment config cannot be loaded, names an unknown key,
    or holds a value of the wrong type.
    """

    pass


class ValidationError(ModgateError):
    """Input validation error for library arguments."""

    def __init__(self, message: str, field: str | None = None):
        """Initialize ValidationError.

        Args:
            message: The error message
            field: The field that failed validation (optional)
        """
        if field:
            message = f"Validation error for '{field}': {message}"
        super().__init__(message)
        self.field = field


class SupportMismatchError(ModgateError):
    """Distributions that must share a support do not."""

    pass


class OffSupportError(ModgateError):
    """A tabular object was queried on a sequence outside its support."""

    def __init__(self, message: str, sequence: tuple[int, ...] | None = None):
        details = f"Sequence: {sequence}" if sequence is not None else None
        super().__init__(message, details=details)


class InfeasibleGateError(ModgateError):
    """The normalized gate space is empty for the given experts.

    Raised when Σ_x min_k π̂_k(x) > 1 or Σ_x max_k π̂_k(x) < 1.
    """

    def __init__(self, message: str, low_mass: float, high_mass: float):
        details = f"sum of min likelihoods={low_mass:.6g}, sum of max={high_mass:.6g}"
        super().__init__(message, details=details)
        self.low_mass = low_mass
        self.high_mass = high_mass


class NumericalError(ModgateError):
    """Non-finite values reached a place where a finite value is required."""

    pass


class SamplingBudgetError(ModgateError):
    """Rejection sampling exhausted its trial budget."""

    def __init__(self, message: str, trials: int):
        super().__init__(message, details=f"Trials: {trials}")
        self.trials = trials


class ZeroMassError(ModgateError):
    """A prefix or model carries zero probability mass."""

    pass


class PersistenceError(ModgateError):
    """Reading or writing a modgate file failed."""

    def __init__(self, message: str, path: str | None = None):
        details = f"Path: {path}" if path else None
        super().__init__(message, details=details)
        self.path = path


@contextmanager
def error_context(
    operation: str,
    *,
    transform: dict[type[Exception], type[ModgateError]] | None = None,
    details: dict[str, Any] | None = None,
) -> Generator[None]:
    """Context manager for consistent error transformation.

    Args:
        operation: Description of the operation being performed
        transform: Dict mapping exception types to ModgateError types
        details: Additional context details to include in errors

    Example:
        with error_context("reading expert file",
                           transform={OSError: PersistenceError},
                           details={"path": str(path)}):
            text = path.read_text()
    """
    try:
        yield
    except ModgateError:
        raise
    except Exception as e:
        if transform:
            for exc_type, error_type in transform.items():
                if isinstance(e, exc_type):
                    error_msg = f"Failed to {operation}: {e}"
                    kwargs: dict[str, Any] = {"message": error_msg}
                    if details:
                        if error_type is PersistenceError:
                            kwargs["path"] = details.get("path")
                        elif error_type is ValidationError:
                            kwargs["field"] = details.get("field")
                    raise error_type(**kwargs) from e

        raise ModgateError(
            f"Unexpected error during {operation}: {e}",
            details=str(details) if details else None,
        ) from e


def error_handler(
    *,
    exit_on_error: bool = True,
    log_traceback: bool = True,
) -> Callable[[T], T]:
    """Decorator for consistent error handling in CLI commands.

    Catches ModgateError, prints a user-friendly message, logs the failure and
    exits with the error's exit code.

    Args:
        exit_on_error: Whether to exit the program on error (default: True)
        log_traceback: Whether to log the full traceback (default: True)

    Returns:
        Decorated function
    """

    def decorator(func: T) -> T:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return func(*args, **kwargs)
            except ModgateError as e:
                console.print(f"[red]Error:[/red] {e.message}")
                if e.details:
                    console.print(f"[dim]{e.details}[/dim]")

                if log_traceback:
                    logger.exception("Command failed with error: %s", e)
                else:
                    logger.error("Command failed: %s", e)

                if exit_on_error:
                    raise typer.Exit(code=e.exit_code)
                raise
            except KeyboardInterrupt:
                console.print("\n[yellow]Operation cancelled by user[/yellow]")
                if exit_on_error:
                    raise typer.Exit(code=130)  # Standard SIGINT exit code
                raise
            except (typer.Exit, typer.Abort):
                raise
            except Exception as e:
                console.print(f"[red]Unexpected error:[/red] {e}")
                logger.exception("Unexpected error in command: %s", e)

                if exit_on_error:
                    raise typer.Exit(code=EXIT_USAGE)
                raise

        return wrapper  # type: ignore

    return decorator
