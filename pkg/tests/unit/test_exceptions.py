"""Unit tests for the exception hierarchy and CLI error handling."""

import pytest
import typer

from modgate.exceptions import (
    EXIT_FAILURE,
    EXIT_USAGE,
    ConfigurationError,
    InfeasibleGateError,
    ModgateError,
    NumericalError,
    PersistenceError,
    UsageError,
    ValidationError,
    error_context,
    error_handler,
)


@pytest.mark.unit
class TestHierarchy:
    """Tests for error messages and exit codes."""

    def test_exit_codes(self):
        """Usage mistakes exit 1, every other modgate failure exits 2."""
        assert UsageError("bad").exit_code == EXIT_USAGE == 1
        assert ConfigurationError("bad").exit_code == EXIT_FAILURE == 2
        assert NumericalError("nan").exit_code == 2

    def test_details_in_str(self):
        """Details are appended to the message."""
        err = PersistenceError("cannot read", path="/tmp/x")
        assert str(err) == "cannot read\nDetails: Path: /tmp/x"
        assert str(ModgateError("plain")) == "plain"

    def test_validation_field(self):
        """The failing field is named in the message."""
        err = ValidationError("must be positive", field="eta")
        assert err.message == "Validation error for 'eta': must be positive"
        assert err.field == "eta"

    def test_infeasible_gate_masses(self):
        """Infeasible gate spaces report both likelihood masses."""
        err = InfeasibleGateError("empty", low_mass=1.5, high_mass=2.0)
        assert (err.low_mass, err.high_mass) == (1.5, 2.0)
        assert "1.5" in err.details


@pytest.mark.unit
class TestErrorContext:
    """Tests for exception transformation."""

    def test_transform(self):
        """Mapped exceptions become the requested modgate error."""
        with pytest.raises(PersistenceError) as exc_info, error_context(
            "read file", transform={OSError: PersistenceError}, details={"path": "f.txt"}
        ):
            raise FileNotFoundError("f.txt")
        assert exc_info.value.path == "f.txt"
        assert "Failed to read file" in exc_info.value.message

    def test_modgate_errors_pass_through(self):
        """Modgate errors are not wrapped again."""
        with pytest.raises(NumericalError), error_context("solve"):
            raise NumericalError("nan")

    def test_unmapped_becomes_generic(self):
        """Anything else becomes a generic ModgateError."""
        with pytest.raises(ModgateError, match="Unexpected error during solve"), error_context(
            "solve"
        ):
            raise KeyError("x")


@pytest.mark.unit
class TestErrorHandler:
    """Tests for the CLI command decorator."""

    def test_usage_error_exits_1(self):
        """A usage error exits with code 1."""

        @error_handler(log_traceback=False)
        def command():
            raise UsageError("unknown method 'bogus'", option="method")

        with pytest.raises(typer.Exit) as exc_info:
            command()
        assert exc_info.value.exit_code == 1

    def test_configuration_error_exits_2(self):
        """Configuration and numerical failures exit with code 2."""

        @error_handler(log_traceback=False)
        def command():
            raise ConfigurationError("missing required key 'domains'")

        with pytest.raises(typer.Exit) as exc_info:
            command()
        assert exc_info.value.exit_code == 2

    def test_unexpected_error_exits_1(self):
        """Unexpected exceptions exit with code 1."""

        @error_handler()
        def command():
            raise RuntimeError("boom")

        with pytest.raises(typer.Exit) as exc_info:
            command()
        assert exc_info.value.exit_code == 1

    def test_reraise_without_exit(self):
        """With exit_on_error=False the original error propagates."""

        @error_handler(exit_on_error=False, log_traceback=False)
        def command():
            raise NumericalError("nan")

        with pytest.raises(NumericalError):
            command()

    def test_success_passes_value(self):
        """Return values are passed through."""

        @error_handler()
        def command():
            return 42

        assert command() == 42
