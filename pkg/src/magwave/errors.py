"""Exception types raised across the package."""


class MagwaveError(Exception):
    """Base class for all package errors."""


class GeometryError(MagwaveError, ValueError):
    """Invalid sampling grid or failed curve quadrature."""


class JacobianNonPositive(GeometryError):
    """The curved-strip Jacobian 1 + y*beta*gamma(x) reaches zero."""


class IntegerFlux(MagwaveError, ValueError):
    """Aharonov-Bohm flux is an integer, so the field is gauge-trivial."""


class EvalAtSingularity(MagwaveError, ValueError):
    """A potential was evaluated at its singular point."""


class RegionContainsSingularity(MagwaveError, ValueError):
    """A sup-norm region contains the Aharonov-Bohm point."""


class NoConvergence(MagwaveError, RuntimeError):
    """An eigensolver did not reach the requested residual tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class IndefiniteNumerator(MagwaveError, ValueError):
    """The shifted form S - tau*M has a negative direction."""

    def __init__(self, message, most_negative=None):
        super().__init__(message)
        self.most_negative = most_negative


class TrivialFlux(MagwaveError, ValueError):
    """The ball flux vanishes identically on (0, R)."""


class ValidityWindowViolated(MagwaveError, ValueError):
    """|y0 - pi/2| + R >= pi/2, so the cosine factor degenerates."""


class MissingNorm(MagwaveError, KeyError):
    """A norm required by a threshold certificate is absent or negative."""


class BracketFailure(MagwaveError, RuntimeError):
    """An analytic bracket on the existence threshold was violated."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(MagwaveError, ValueError):
    """A configuration value is missing, malformed, or out of range."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
