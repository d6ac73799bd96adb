"""Exception hierarchy shared by all modules."""


class MagtraceError(Exception):
    """Base class for library errors."""


class DomainError(MagtraceError, ValueError):
    """Argument outside the domain of an operation."""


class RegimeError(DomainError):
    """Energy or field values in the wrong dynamical regime."""


class IntegrationError(MagtraceError):
    """ODE integration failed; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EnumerationError(MagtraceError):
    """Group enumeration produced an impossible element or an incomplete list."""


class SpectrumWindowError(MagtraceError):
    """Spectral data do not reach far enough for the requested sum."""


class DataFormatError(MagtraceError, ValueError):
    """A data file could not be parsed or failed validation."""
