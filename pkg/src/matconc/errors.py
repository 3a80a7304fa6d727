"""Exception types shared across the package."""


class MatconcError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(MatconcError):
    """Operands have incompatible shapes."""


class DomainError(MatconcError):
    """Input lies outside the mathematical domain of the operation."""


class ParamMismatch(MatconcError):
    """A parameter set does not match what the chosen family requires."""


class GammaOutOfRange(MatconcError):
    """A tuning scalar lies outside its admissible open interval."""


class PreconditionFailed(MatconcError):
    """A documented precondition of the operation does not hold."""


class ConfigError(MatconcError):
    """A run configuration is malformed or inconsistent."""


class IncompatiblePair(ConfigError):
    """The requested bound/generator combination is not registered."""


class AssumptionViolated(UserWarning):
    """A distributional assumption looks violated; reported, not fatal."""
