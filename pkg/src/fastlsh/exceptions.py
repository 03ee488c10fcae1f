"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class NumericFailureError(RuntimeError):
    """A quadrature or root-finding step did not converge.

    ``diagnostics`` carries whatever the integrator reported (error
    estimate, number of subintervals, message) so callers can log it.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UndefinedRhoError(ArithmeticError):
    """rho(c) is undefined because one of the collision probabilities is 1."""


class FormatError(ValueError):
    """A binary vector or index file is malformed.

    Parameters
    ----------
    message : str
    offset : int or None
        Byte offset at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(ValueError):
    """An experiment configuration is missing keys or has bad values."""
