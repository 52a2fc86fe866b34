"""Exception hierarchy shared by every module.

Parameter and domain problems subclass ``ValueError``; numerical failures
subclass ``RuntimeError``.  The CLI maps the two families to exit codes 2
and 3.
"""


class LRError(Exception):
    """Base class for all package errors."""


class ParameterError(LRError, ValueError):
    """Invalid model or algorithm parameter."""


class UnsupportedOrderError(ParameterError):
    """Requested expansion order beyond what is implemented."""


class DomainError(LRError, ValueError):
    """Evaluation point outside the effective domain of a CGF."""


class RangeError(DomainError):
    """Threshold not reachable by K' inside the domain."""

    def __init__(self, msg, k1_inf=None, k1_sup=None):
        super().__init__(msg)
        self.k1_inf = k1_inf
        self.k1_sup = k1_sup


class DegenerateThresholdError(DomainError):
    """Threshold too close to the mean (saddlepoint at zero)."""


class MomentExplosionError(DomainError):
    """K(1) is infinite, so a share-measure tilt does not exist."""


class CapabilityError(LRError, ValueError):
    """Model cannot supply a requested derivative order."""


class ConvergenceError(LRError, RuntimeError):
    """Iterative procedure failed to converge."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class TruncationError(ConvergenceError):
    """Inversion integrand did not decay within the allowed range."""


class AccuracyWarning(UserWarning):
    """Numerical result may be less accurate than requested."""
