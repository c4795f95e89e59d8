"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid scenario parameters or malformed inputs."""


class FeasibilityError(ValueError):
    """The requested target SINR cannot be met at the given load."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    The last residual (scalar or per-user array) is kept on ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
