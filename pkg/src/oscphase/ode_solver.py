"""Adaptive piecewise Chebyshev solver for first-order systems y' = F(t, y).

Each candidate interval is solved by collocation of the integral equation
``u(t) = w + int_c^t F(s, u(s)) ds`` at the k extremal nodes.  Linear systems
are solved directly; nonlinear ones start from an implicit trapezoid sweep
across the nodes and are refined by Newton's method.  An interval is accepted
when the trailing half of the Chebyshev coefficients of every component is
small; otherwise it is bisected.

Right-hand sides are vectorized over the nodes: ``rhs(t, y)`` receives ``t``
of shape ``(k,)`` and ``y`` of shape ``(n, k)`` and returns shape ``(n, k)``;
a Jacobian returns shape ``(n, n, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chebyshev import (
    PiecewiseChebyshevExpansion,
    extremal_nodes,
    integration_matrix,
    tail_ratio,
    vals_to_coeffs,
)
from .errors import InadmissibleState, InvalidArgument, SingularMatrixError, SolverFailure
from .linalg import MACHINE_EPS, lu_solve

__all__ = [
    "OdeSystem",
    "LinearOdeSystem",
    "SolverConfig",
    "PiecewiseSolution",
    "NewtonFailure",
    "local_solve_linear",
    "local_solve_nonlinear",
    "solve_ivp",
    "solve_tvp",
]


class NewtonFailure(ArithmeticError):
    """Newton's method did not converge on one interval."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the adaptive solvers.

    Attributes
    ----------
    k : int
        Collocation points per interval (expansions of degree k - 1).
    eps : float
        Acceptance threshold for the coefficient tail ratio.
    max_intervals : int
        Upper bound on the number of live (accepted plus pending) intervals.
    max_newton : int
        Newton iteration cap per interval.
    newton_tol : float
        Relative size of the Newton correction at which iteration stops.
    collocation : {"lobatto", "radau"}
        ``"lobatto"`` interpolates the right-hand side at all k nodes.
        ``"radau"`` drops the anchor node from that interpolant; the scheme
        then damps stiff oscillatory modes rather than propagating them,
        which keeps the solution on the slowly varying branch of stiff
        problems such as Kummer's equation at high frequency.
    """

    k: int = 16
    eps: float = 1e-13
    max_intervals: int = 4096
    max_newton: int = 30
    newton_tol: float = 1e-14
    collocation: str = "lobatto"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise InvalidArgument("k must be an integer >= 2")
        if not 0 < self.eps < 1:
            raise InvalidArgument("eps must lie in (0, 1)")
        if self.max_intervals < 1 or self.max_newton < 1 or self.newton_tol <= 0:
            raise InvalidArgument("budgets and tolerances must be positive")
        if self.collocation not in ("lobatto", "radau"):
            raise InvalidArgument(f"unknown collocation scheme {self.collocation!r}")


@dataclass(frozen=True)
class OdeSystem:
    """Nonlinear system y' = rhs(t, y) of dimension ``dim``.

    ``jac`` is optional; without it a central-difference Jacobian is used.
    ``rhs`` may raise `InadmissibleState` to reject an iterate.
    ``test_components`` lists the components whose coefficient tails decide
    acceptance of an interval (all of them by default).
    """

    dim: int
    rhs: Callable
    jac: Optional[Callable] = None
    test_components: Optional[tuple] = None

    def jacobian(self, t, y):
        if self.jac is not None:
            return np.asarray(self.jac(t, y))
        return _fd_jacobian(self.rhs, t, y)


@dataclass(frozen=True)
class LinearOdeSystem:
    """Linear system y' = matrix(t) y + forcing(t).

    ``matrix(t)`` returns shape ``(n, n, len(t))`` and ``forcing(t)`` shape
    ``(n, len(t))``; a missing forcing means the homogeneous system.
    """

    dim: int
    matrix: Callable
    forcing: Optional[Callable] = None
    test_components: Optional[tuple] = None

    def rhs(self, t, y):
        out = np.einsum("ijk,jk->ik", self.matrix(t), y)
        if self.forcing is not None:
            out = out + self.forcing(t)
        return out

    def jacobian(self, t, y):
        return np.asarray(self.matrix(t))


def _fd_jacobian(rhs, t, y):
    n, k = y.shape
    jac = np.empty((n, n, k))
    for j in range(n):
        step = np.sqrt(MACHINE_EPS) * (1.0 + np.abs(y[j]))
        yp = y.copy()
        ym = y.copy()
        yp[j] += step
        ym[j] -= step
        jac[:, j, :] = (rhs(t, yp) - rhs(t, ym)) / (2.0 * step)
    return jac


class PiecewiseSolution:
    """Solution components sharing one partition."""

    def __init__(self, components):
        self.components = list(components)
        if not self.components:
            raise InvalidArgument("need at least one component")
        first = self.components[0].breakpoints
        for comp in self.components[1:]:
            if not np.array_equal(comp.breakpoints, first):
                raise InvalidArgument("components must share breakpoints")

    @property
    def breakpoints(self):
        return self.components[0].breakpoints

    @property
    def dim(self):
        return len(self.components)

    @property
    def n_intervals(self):
        return self.components[0].m

    @property
    def n_coeffs(self):
        return self.components[0].n_coeffs

    def __call__(self, t):
        return np.array([comp(t) for comp in self.components])

    def __getitem__(self, i):
        return self.components[i]

    def to_dict(self):
        return {"components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, data):
        return cls([PiecewiseChebyshevExpansion.from_dict(c) for c in data["components"]])


def _collocation_matrix(S, J):
    # I - [S diag(J_ij)]_{ij} as an (n k) x (n k) block matrix
    n, _, k = J.shape
    blocks = S[None, None, :, :] * J[:, :, None, :]
    M = -blocks.transpose(0, 2, 1, 3).reshape(n * k, n * k)
    M[np.diag_indices(n * k)] += 1.0
    return M


def local_solve_linear(matrix, forcing, interval, w, k=16, anchor="left", collocation="lobatto"):
    """Collocation solve of a linear system on one interval.

    Solves ``u(t) = w + int_{t0}^t (A(s) u(s) + g(s)) ds`` where ``t0`` is
    the left (``anchor="left"``) or right endpoint, and returns the solution
    values at the k extremal nodes, shape ``(n, k)``.

    Raises `SingularMatrixError` if the collocation matrix is singular.
    """
    t = extremal_nodes(k, interval)
    A = np.asarray(matrix(t), dtype=float)
    n = A.shape[0]
    w = np.asarray(w, dtype=float).reshape(n)
    S = integration_matrix(k, interval, anchor, drop_anchor=collocation == "radau")
    rhs = np.repeat(w[:, None], k, axis=1)
    if forcing is not None:
        rhs = rhs + np.asarray(forcing(t), dtype=float) @ S.T
    M = _collocation_matrix(S, A)
    return lu_solve(M, rhs.ravel()).reshape(n, k)


def _small_solve(A, b):
    # closed forms for the 1x1 and 2x2 systems of the predictor
    n = A.shape[0]
    if n == 1:
        return b / A[0, 0]
    if n == 2:
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        return np.array([A[1, 1] * b[0] - A[0, 1] * b[1], A[0, 0] * b[1] - A[1, 0] * b[0]]) / det
    return np.linalg.solve(A, b)


def _trapezoid_predictor(system, t, w, anchor):
    # linearly implicit trapezoid rule: one Newton step per node
    n, k = w.shape[0], t.size
    Y = np.empty((n, k))
    order = list(range(k)) if anchor == "left" else list(range(k - 1, -1, -1))
    Y[:, order[0]] = w
    eye = np.eye(n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for prev, cur in zip(order[:-1], order[1:]):
            h = t[cur] - t[prev]
            y0 = Y[:, prev : prev + 1]
            ts = t[prev : prev + 1]
            f0 = system.rhs(ts, y0)[:, 0]
            jac = system.jacobian(ts, y0)[:, :, 0]
            Y[:, cur] = y0[:, 0] + _small_solve(eye - 0.5 * h * jac, h * f0)
            if not np.all(np.isfinite(Y[:, cur])):
                raise NewtonFailure("trapezoid predictor produced nonfinite values")
    return Y


def local_solve_nonlinear(system, interval, w, config=None, anchor="left"):
    """Trapezoid predictor followed by Newton on the collocation equations.

    Returns node values of shape ``(n, k)``.  Raises `NewtonFailure` if the
    iteration does not converge within ``config.max_newton`` steps, and
    propagates `InadmissibleState` from the right-hand side.
    """
    config = config or SolverConfig()
    k = config.k
    t = extremal_nodes(k, interval)
    w = np.asarray(w, dtype=float).reshape(system.dim)
    S = integration_matrix(k, interval, anchor, drop_anchor=config.collocation == "radau")
    Y = _trapezoid_predictor(system, t, w, anchor)
    delta_norm = np.inf
    for _ in range(config.max_newton):
        F = system.rhs(t, Y)
        R = Y - w[:, None] - F @ S.T
        M = _collocation_matrix(S, system.jacobian(t, Y))
        delta = lu_solve(M, -R.ravel()).reshape(Y.shape)
        Y = Y + delta
        if not np.all(np.isfinite(Y)):
            raise NewtonFailure("Newton iterate is not finite")
        prev, delta_norm = delta_norm, np.max(np.abs(delta))
        scale = max(np.max(np.abs(Y)), np.finfo(float).tiny)
        if delta_norm <= config.newton_tol * scale:
            system.rhs(t, Y)  # admissibility of the final iterate
            return Y
        # stagnation at the roundoff floor counts as convergence
        if delta_norm <= 1e3 * config.newton_tol * scale and delta_norm >= 0.5 * prev:
            system.rhs(t, Y)
            return Y
    raise NewtonFailure(f"Newton did not converge (last correction {delta_norm:.3e})")


def _local_solve(system, interval, w, config, anchor):
    if isinstance(system, LinearOdeSystem):
        return local_solve_linear(
            system.matrix, system.forcing, interval, w, config.k, anchor, config.collocation
        )
    return local_solve_nonlinear(system, interval, w, config, anchor)


def _adaptive(system, interval, v, config, direction):
    config = config or SolverConfig()
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgument(f"interval must satisfy a < b, got ({a}, {b})")
    v = np.asarray(v, dtype=float).reshape(system.dim)
    min_width = 1e-13 * (b - a)
    anchor = "left" if direction == "forward" else "right"
    tested = slice(None) if system.test_components is None else list(system.test_components)
    stack = [(a, b)]
    accepted = []
    w = v
    while stack:
        c, d = stack.pop()
        ok = False
        try:
            Y = _local_solve(system, (c, d), w, config, anchor)
            coeffs = vals_to_coeffs(Y)
            ok = bool(np.all(tail_ratio(coeffs[tested]) < config.eps))
        except (SingularMatrixError, NewtonFailure, InadmissibleState, FloatingPointError):
            ok = False
        if ok:
            accepted.append((c, d, coeffs))
            w = Y[:, -1] if direction == "forward" else Y[:, 0]
            continue
        if d - c < 2 * min_width:
            raise SolverFailure("minimum interval width reached", stage="ode", interval=(c, d))
        if len(accepted) + len(stack) + 2 > config.max_intervals:
            raise SolverFailure("subdivision budget exhausted", stage="ode", interval=(c, d))
        mid = 0.5 * (c + d)
        if direction == "forward":
            stack.append((mid, d))
            stack.append((c, mid))
        else:
            stack.append((c, mid))
            stack.append((mid, d))
    accepted.sort(key=lambda item: item[0])
    breaks = [accepted[0][0]] + [item[1] for item in accepted]
    coeffs = np.stack([item[2] for item in accepted], axis=1)  # (n, m, k)
    return PiecewiseSolution([PiecewiseChebyshevExpansion(breaks, coeffs[i]) for i in range(system.dim)])


def solve_ivp(system, interval, v, config=None):
    """Solve ``y' = F(t, y)``, ``y(a) = v`` adaptively on ``interval = (a, b)``.

    Intervals are processed leftmost first and each one starts from the
    value of its accepted left neighbour.
    """
    return _adaptive(system, interval, v, config, "forward")


def solve_tvp(system, interval, v, config=None):
    """Solve ``y' = F(t, y)``, ``y(b) = v`` adaptively, rightmost interval first."""
    return _adaptive(system, interval, v, config, "backward")
