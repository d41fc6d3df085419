"""Exception hierarchy shared by every solver stage."""

from __future__ import annotations


class OscPhaseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(OscPhaseError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(OscPhaseError, ValueError):
    """A point lies outside the interval on which an object is defined."""


class InvalidCoefficient(OscPhaseError, ValueError):
    """The coefficient q is not positive where it must be."""


class SingularMatrixError(OscPhaseError, ArithmeticError):
    """A linear system could not be solved to the required accuracy."""


class InadmissibleState(OscPhaseError, ArithmeticError):
    """A nonlinear iterate left the region where the system is defined.

    Raised from right-hand sides (for example when the phase derivative of
    Kummer's system becomes nonpositive); the adaptive solvers respond by
    bisecting the current interval.
    """


class SolverFailure(OscPhaseError, RuntimeError):
    """An adaptive procedure exhausted its subdivision budget.

    Attributes
    ----------
    stage : str
        Pipeline stage that failed (``"phase"``, ``"levin"``, ``"ode"`` ...).
    interval : tuple of float or None
        The smallest interval that could not be resolved.
    """

    def __init__(self, message, stage="ode", interval=None):
        super().__init__(message)
        self.stage = stage
        self.interval = interval

    def __str__(self):
        base = super().__str__()
        if self.interval is not None:
            base += f" (interval [{self.interval[0]!r}, {self.interval[1]!r}])"
        return f"[{self.stage}] {base}"


class ResonanceError(OscPhaseError, ArithmeticError):
    """Boundary conditions are (nearly) annihilated by a homogeneous solution."""
