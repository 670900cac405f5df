"""Exception taxonomy shared by all primerace modules.

CLI exit-code mapping: ConfigError and bad usage -> 2, ResourceError /
CoverageError -> 3, invariant failures detected by pipelines -> 1.
"""


class RaceError(Exception):
    """Base class for all primerace errors."""


class InvalidModulusError(RaceError):
    """Modulus outside the supported range (q >= 3)."""


class InvalidClassError(RaceError):
    """Residue class not a unit, or degenerate class pair."""


class DegenerateRaceError(RaceError):
    """Race with an empty side (NR_q empty)."""


class OutOfRangeError(RaceError):
    """Query beyond the sieve limit or other documented range."""


class ResourceError(RaceError):
    """Request exceeding the configured memory/size budget."""


class PrimitivityError(RaceError):
    """Zero computation requested for a non-primitive or principal character."""


class PrecisionError(RaceError):
    """Numerical refinement failed to reach the target precision."""


class CoverageError(RaceError):
    """Zero store does not cover a required character up to the requested height."""


class InsufficientCoverageError(CoverageError):
    """Coverage below the documented minimum for a statistic."""


class ZeroFileError(RaceError):
    """Malformed zero file; carries the offending line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class ValidationError(RaceError):
    """Ingested data violating a store invariant (e.g. negative ordinate)."""


class GridError(RaceError):
    """Fourier grid exhausted before the transform decayed."""


class BudgetError(RaceError):
    """Exhaustive enumeration beyond budget with sampling disabled."""


class InvalidMeasureError(RaceError):
    """Empty or malformed empirical measure."""


class InvalidExponentError(RaceError):
    """Threshold exponent outside its valid range (A > 1)."""


class LinnikSearchError(RaceError):
    """Progression search exhausted its ceiling without finding a prime."""

    def __init__(self, message, steps_tried=None):
        super().__init__(message)
        self.steps_tried = steps_tried


class InfeasibleConstructionError(RaceError):
    """Requested construction needs more residue tuples than exist."""


class UnsupportedModulusError(RaceError):
    """Modulus outside the shape accepted by an operation."""


class ConfigError(RaceError):
    """Invalid run configuration."""
