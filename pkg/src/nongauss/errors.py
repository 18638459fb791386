"""Semantic exception types shared across the package."""


class NonGaussError(Exception):
    """Base error; ``code`` gives a stable machine-readable identifier."""

    code = "error"


class NoDensityError(NonGaussError):
    """The law is purely discrete and has no Lebesgue density."""

    code = "no_density"


class GridTooNarrowError(NonGaussError):
    """The grid truncates non-negligible mass or undersamples the spectrum."""

    code = "grid_too_narrow"


class GridMismatchError(NonGaussError):
    """Two grids that must share a GridSpec do not."""

    code = "grid_mismatch"


class DegenerateDensityError(NonGaussError):
    """A density grid with zero mass or nonpositive variance."""

    code = "degenerate_density"


class DegenerateDistributionError(NonGaussError):
    """A law with zero or non-finite variance cannot be standardized."""

    code = "degenerate_distribution"


class NotStandardizedError(NonGaussError):
    """An operation that requires a zero-mean unit-variance law got a raw one."""

    code = "not_standardized"


class TailUnderflowError(NonGaussError):
    """A conditional-mean denominator underflowed far outside the bulk."""

    code = "tail_underflow"


class RateUndefinedError(NonGaussError):
    """All tail points sit below the noise floor; no decay rate exists."""

    code = "rate_undefined"


class ConfigError(NonGaussError):
    """Invalid run configuration (unknown keys, bad ranges, bad types)."""

    code = "config"


class NumericalDegradationWarning(UserWarning):
    """Clipped negative mass exceeded the trusted threshold."""
