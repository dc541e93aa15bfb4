"""Exception taxonomy for the solver and its I/O surface."""


class HaptoviroError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HaptoviroError, ValueError):
    """An input value lies outside the mathematically admissible range."""


class DimensionError(HaptoviroError, ValueError):
    """Array shapes do not match each other or the grid."""


class StateError(HaptoviroError):
    """A State object is malformed (wrong shapes, non-finite entries)."""


class StepError(HaptoviroError):
    """A time step was requested that violates the stability contract."""


class PositivityError(HaptoviroError):
    """A field left the nonnegative cone by more than the clip tolerance.

    Carries the offending field name, the (row, col) cell index and the value
    so callers can report where a run went unstable."""

    def __init__(self, message, field=None, cell=None, value=None):
        super().__init__(message)
        self.field = field
        self.cell = cell
        self.value = value


class FitError(HaptoviroError):
    """A decay fit cannot be performed on the given window."""


class ConfigError(HaptoviroError):
    """A configuration file is syntactically or semantically invalid."""


class FileFormatError(HaptoviroError):
    """A diagnostics or snapshot file does not match the documented format."""
