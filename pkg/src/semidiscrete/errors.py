"""Exception hierarchy shared by every module."""


class SemiDiscreteError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SemiDiscreteError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateDiffusion(SemiDiscreteError, ValueError):
    """The diffusion factor vanishes at a nonzero state."""


class CoefficientNegative(SemiDiscreteError, ValueError):
    """A coefficient factor returned a negative value.

    The offending state is kept on ``.u`` so callers can report it.
    """

    def __init__(self, which, u, value):
        self.which = which
        self.u = u
        self.value = value
        super().__init__(f"{which} factor is negative at u={u!r}: {value!r}")


class InvalidGuard(SemiDiscreteError, ValueError):
    """Explosion threshold does not lie above the absorption floor."""


class UndefinedEstimate(SemiDiscreteError, ValueError):
    """A trajectory statistic cannot be computed for this path."""


class NoValidP(SemiDiscreteError, ValueError):
    """No admissible moment exponent exists for an indeterminate verdict."""


class ExpressionError(SemiDiscreteError, ValueError):
    """A coefficient expression is malformed or uses unsupported syntax."""


class ConfigError(SemiDiscreteError, ValueError):
    """A run configuration field is missing or invalid.

    ``field`` names the offending key.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class PathSimulationError(SemiDiscreteError):
    """Wraps an error raised while simulating one path of an ensemble."""

    def __init__(self, path_index, cause):
        self.path_index = path_index
        self.cause = cause
        super().__init__(f"path {path_index}: {cause}")
