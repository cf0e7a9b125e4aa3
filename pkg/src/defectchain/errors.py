"""Exception and warning classes shared across the package."""


class ConfigurationError(ValueError):
    """Invalid chain, defect, or schedule parameters."""


class SingularityError(ArithmeticError):
    """Evaluation hit a pole or a band edge."""


class NumericalFailure(RuntimeError):
    """A root finder, quadrature, or integrator self-check failed."""


class ProtocolError(RuntimeError):
    """The requested protocol is unavailable for the given parameters."""


class NumericalWarning(UserWarning):
    """A self-check detected reduced accuracy without aborting."""
