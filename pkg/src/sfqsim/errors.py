"""Exception types shared across the package."""


class SfqsimError(Exception):
    """Base class for all package errors."""


class ParameterError(SfqsimError, ValueError):
    """Invalid physical or configuration parameter."""


class IntegrityError(SfqsimError):
    """A numerical-integrity check failed (CPTP violation, bad eigensolve)."""


class CalibrationError(SfqsimError):
    """Gate calibration could not converge."""


class FitError(SfqsimError):
    """A curve fit failed or produced an unphysical result."""


class ScheduleError(SfqsimError, ValueError):
    """Invalid TDM schedule (overlapping or out-of-order entries)."""


class ConfigError(SfqsimError, ValueError):
    """Malformed run configuration or input file."""
