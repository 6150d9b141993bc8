"""Exception types raised by the library."""


class QKYamabeError(Exception):
    """Base class for all library errors."""


class DomainError(QKYamabeError, ValueError):
    """A field was evaluated outside the region where it is defined (phi <= 0, u <= 0, ...)."""

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} at point {tuple(float(v) for v in point)}"
        super().__init__(message)
        self.point = point


class SingularSlopeError(QKYamabeError, ArithmeticError):
    """The profile ODE cannot be solved for phi'' because phi' vanished with lambda != 0."""


class SolvabilityError(QKYamabeError, ValueError):
    """Right-hand side of a periodic Poisson problem is not in the range of the Laplacian."""


class SolverError(QKYamabeError, RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
