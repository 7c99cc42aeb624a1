"""Exception types shared by the classical and quantum solvers."""


class InfodynError(Exception):
    """Base class for all package errors."""


class DegenerateConditioningError(InfodynError, ValueError):
    """A level set of the conditioning variable carries zero mass."""


class InfeasibleError(InfodynError):
    """The constraint set is empty."""

    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step


class UnboundedError(InfodynError):
    """The infimum of the projection objective is not finite."""


class ConvergenceError(InfodynError):
    """The solver did not reach its tolerances within the iteration cap."""

    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step
