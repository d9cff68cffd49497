"""Exception types raised by the library."""


class ShapeError(ValueError):
    """Array shape does not match the grid it is used with."""


class DomainError(ValueError):
    """A functional was evaluated outside its domain (e.g. ln of f <= 0)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConstructionError(ValueError):
    """A functional, potential or operator was built with invalid parameters."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``best`` holds the best iterate found and ``history`` the residual record.
    """

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])


class SingularSystemError(RuntimeError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StabilityError(ValueError):
    """Requested time step exceeds the stability bound of the explicit scheme."""

    def __init__(self, message, dt=None, dt_max=None):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max


class NumericalBlowup(RuntimeError):
    """NaN or Inf appeared during time integration.

    ``last_good`` is the last finite state and ``time`` its time stamp.
    """

    def __init__(self, message, last_good=None, time=None, step=None):
        super().__init__(message)
        self.last_good = last_good
        self.time = time
        self.step = step


class ConfigError(ValueError):
    """Scenario configuration failed validation."""
