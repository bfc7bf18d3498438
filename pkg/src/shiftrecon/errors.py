"""Exception types shared across the package."""


class ShiftReconError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ShiftReconError, ValueError):
    pass


class DegenerateSystemError(ShiftReconError):
    """A linear system is too ill-conditioned to solve (colliding nodes)."""


class RankDeficientError(ShiftReconError):
    """The exponential design matrix does not have full column rank."""


class NoCertificateError(ShiftReconError):
    """The metric span (or sample gap) vanishes, so no bound can be issued."""


class DivisionHazardError(ShiftReconError):
    """A Fourier transform that must be divided by vanishes on the sampling set."""


class UnsamplableComponentError(ShiftReconError):
    """A decoupled component has an empty common-zero sampling set."""


class RankDeficiencyWarning(UserWarning):
    """A recovered amplitude is numerically zero."""
