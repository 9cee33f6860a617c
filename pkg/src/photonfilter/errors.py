"""Exception types shared across the package.

The CLI maps these onto exit codes: validation errors exit 2, numerical
failures exit 3, I/O problems exit 4.
"""


class PhotonFilterError(Exception):
    """Base class for all package errors."""


class ValidationError(PhotonFilterError):
    """Bad configuration value or malformed input."""


class DimensionError(ValidationError):
    """Operator/state shape mismatch or invalid truncation dimension."""


class PhysicalityError(PhotonFilterError):
    """A state violates Hermiticity/normalization/positivity tolerances."""


class TruncationError(PhotonFilterError):
    """Fock-space truncation too small for the requested state."""


class NumericalInstabilityError(PhotonFilterError):
    """An integrator left its validity region (usually dt too large)."""


class StepSizeError(NumericalInstabilityError):
    """Jump probability per step exceeded the thinning cap."""


class CorruptedStateError(NumericalInstabilityError):
    """A rate came out with an impossible value (negative, complex)."""


class UnsupportedConfigurationError(PhotonFilterError):
    """A representation was asked to do something it cannot (by design)."""
