"""Phase-function solver for y'' + q(t) y = f(t) with slowly varying q > 0."""

from .chebyshev import ChebyshevExpansion, PiecewiseChebyshevExpansion
from .errors import (
    DomainError,
    InadmissibleState,
    InvalidArgument,
    InvalidCoefficient,
    OscPhaseError,
    ResonanceError,
    SingularMatrixError,
    SolverFailure,
)
from .levin import LevinTable, OscillatoryIntegrand, adaptive_levin, integral_to, levin_local
from .ode_solver import LinearOdeSystem, OdeSystem, SolverConfig, solve_ivp, solve_tvp
from .phase import PhaseFunction, build_phase, eval_basis
from .solve import (
    BoundaryConditions,
    Solution,
    SolveReport,
    eval_solution,
    fit_constants,
    particular_eval,
    solve,
)

__version__ = "0.1.0"
