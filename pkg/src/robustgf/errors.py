"""Exception types shared across the package."""


class RobustGFError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSpectrum(RobustGFError):
    """Raised when eigenvalue separation is too small for first-order corrections.

    The perturbation formulas divide by eigenvalue differences, so a
    (near-)repeated eigenvalue would silently blow up the corrections.
    """


class GenerationFailed(RobustGFError):
    """Raised when a random graph generator cannot produce a connected graph."""


class CapExceeded(RobustGFError):
    """Raised when exhaustive enumeration is requested for too many edges."""


class SingularSystem(RobustGFError):
    """Raised when the design normal equations stay singular even after ridge escalation."""


class InvalidNominal(RobustGFError):
    """Raised when a nominal filter is identically zero and errors cannot be normalized."""
