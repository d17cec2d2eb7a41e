"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Shapes, lags or histories do not fit together."""


class NumericError(ArithmeticError):
    """A computation produced or received non-finite values."""


class SingularityError(NumericError):
    """Euler-angle kinematics evaluated too close to gimbal lock."""


class TrimError(RuntimeError):
    """Newton trim did not converge.

    The residual vector at the last iterate is kept on ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(NumericError):
    """A simulated trajectory left the finite numbers."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
