"""Exception hierarchy shared by every module."""


class SlowLightError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SlowLightError, ValueError):
    pass


class DomainError(SlowLightError, ValueError):
    pass


class NoRealRootError(SlowLightError, ValueError):
    pass


class QuadratureError(SlowLightError, ArithmeticError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FiniteEscapeError(SlowLightError, ArithmeticError):
    def __init__(self, message, tau_escape):
        super().__init__(message)
        self.tau_escape = tau_escape


class SingularityError(SlowLightError, ArithmeticError):
    pass


class InsufficientAsymptoteError(SlowLightError, ValueError):
    pass


class NumericalInstabilityError(SlowLightError, ArithmeticError):
    """Raised by the integrators; may carry the partial result computed so far."""

    def __init__(self, message, index=None, partial=None, last_stable_zeta=None):
        super().__init__(message)
        self.index = index
        self.partial = partial
        self.last_stable_zeta = last_stable_zeta


class NoStopError(SlowLightError, ArithmeticError):
    def __init__(self, message, tail_estimate=None):
        super().__init__(message)
        self.tail_estimate = tail_estimate


class ConventionError(SlowLightError):
    """No sign/form convention (or more than one) makes the analytic family solve the dynamics."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class GridError(SlowLightError, ValueError):
    pass


class ConfigError(SlowLightError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
