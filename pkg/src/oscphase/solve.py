"""Inhomogeneous solver for y'' + q y = f with two-point boundary conditions.

The solution is written ``y = c1 u + c2 v + z`` where ``u, v`` is the phase
basis and

    z(t) = v(t) U(t) - u(t) V(t),   U + i V = int_a^t exp(i alpha) f / sqrt(alpha'),

so that ``U = int_a^t u f`` and ``V = int_a^t v f`` come from one Levin table.
Since ``u v' - u' v = 1``, z satisfies ``z'' + q z = f`` with ``z(a) = z'(a) = 0``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidArgument, InvalidCoefficient, ResonanceError, SolverFailure
from .levin import LevinTable, OscillatoryIntegrand, adaptive_levin
from .ode_solver import SolverConfig
from .phase import PhaseFunction, build_phase

__all__ = [
    "BoundaryConditions",
    "SolveReport",
    "Solution",
    "RESONANCE_TOL",
    "basis_values",
    "particular_eval",
    "fit_constants",
    "solve",
    "eval_solution",
    "eval_second_derivative",
    "relative_residual",
    "phase_integrand",
]

# second pivot of the row-equilibrated 2x2 system relative to the first
RESONANCE_TOL = 1e-12

# points used for SolveReport.residual_estimate
RESIDUAL_SAMPLES = 257


@dataclass(frozen=True)
class BoundaryConditions:
    """Two linear conditions on ``(y(a), y'(a), y(b), y'(b))``.

    Row ``(w_a, w'_a, w_b, w'_b, beta)`` means
    ``w_a y(a) + w'_a y'(a) + w_b y(b) + w'_b y'(b) = beta``.
    """

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.shape != (2, 5):
            raise InvalidArgument(f"boundary conditions need shape (2, 5), got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InvalidArgument("boundary conditions must be finite")
        if np.any(np.all(rows[:, :4] == 0, axis=1)):
            raise InvalidArgument("a boundary row has no nonzero weight")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def weights(self):
        return self.rows[:, :4]

    @property
    def beta(self):
        return self.rows[:, 4]

    @classmethod
    def initial(cls, y0, yp0):
        """``y(a) = y0``, ``y'(a) = yp0``."""
        return cls([[1, 0, 0, 0, y0], [0, 1, 0, 0, yp0]])

    @classmethod
    def terminal(cls, y1, yp1):
        """``y(b) = y1``, ``y'(b) = yp1``."""
        return cls([[0, 0, 1, 0, y1], [0, 0, 0, 1, yp1]])

    @classmethod
    def dirichlet(cls, ya, yb):
        """``y(a) = ya``, ``y(b) = yb``."""
        return cls([[1, 0, 0, 0, ya], [0, 0, 1, 0, yb]])

    @classmethod
    def periodic(cls):
        """``y(a) = y(b)``, ``y'(a) = y'(b)``."""
        return cls([[1, 0, -1, 0, 0], [0, 1, 0, -1, 0]])

    def residual(self, ya, ypa, yb, ypb):
        """Left-hand side minus beta for each row."""
        return self.weights @ np.array([ya, ypa, yb, ypb]) - self.beta

    def to_dict(self):
        return {"rows": self.rows.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["rows"])


@dataclass
class SolveReport:
    """Timings, sizes and diagnostics of one solve.

    ``condition`` is the 2-norm condition number of the row-equilibrated
    boundary matrix; ``residual_estimate`` is the sampled relative ODE
    residual ``max|y'' + q y - f| / (max|f| + max q * max|y|)``.
    """

    time_phase: float = 0.0
    time_levin: float = 0.0
    time_bc: float = 0.0
    n_coeffs_phase: int = 0
    n_coeffs_levin: int = 0
    n_intervals_phase: int = 0
    n_intervals_levin: int = 0
    residual_estimate: float = float("nan")
    condition: float = float("nan")

    @property
    def time_total(self):
        return self.time_phase + self.time_levin + self.time_bc

    def to_dict(self):
        return asdict(self)


@dataclass
class Solution:
    """``y = c1 u + c2 v + z`` on ``phase.interval``.

    ``q`` and ``f`` are kept for residual evaluation; they are not
    serialized.
    """

    phase: PhaseFunction
    table: LevinTable
    c1: float
    c2: float
    report: SolveReport = field(default_factory=SolveReport)
    bcs: Optional[BoundaryConditions] = None
    q: Optional[Callable] = None
    f: Optional[Callable] = None

    @property
    def interval(self):
        return self.phase.interval

    def __call__(self, t):
        return eval_solution(self, t)[0]

    def derivative(self, t):
        return eval_solution(self, t)[1]

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "c1": self.c1,
            "c2": self.c2,
            "bcs": None if self.bcs is None else self.bcs.to_dict(),
            "report": self.report.to_dict(),
            "phase": self.phase.to_dict(),
            "table": self.table.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        phase = PhaseFunction.from_dict(data["phase"])
        table = LevinTable.from_dict(data["table"], phase.alpha)
        bcs = None if data.get("bcs") is None else BoundaryConditions.from_dict(data["bcs"])
        return cls(phase, table, float(data["c1"]), float(data["c2"]), SolveReport(**data["report"]), bcs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_points(interval, t):
    t = np.asarray(t, dtype=float)
    a, b = interval
    slack = 1e-12 * (b - a)
    if not np.all(np.isfinite(t)) or np.any(t < a - slack) or np.any(t > b + slack):
        raise DomainError(f"points outside [{a}, {b}]")
    return np.clip(t, a, b)


def _phase_values(phase, t):
    return phase.alpha(t), phase.alpha_p(t), phase.alpha_pp(t)


def _basis_from(alpha, ap, app):
    # w = u + i v = exp(i alpha)/sqrt(alpha'), w' = w (i alpha' - alpha''/(2 alpha'))
    w = np.exp(1j * alpha) / np.sqrt(ap)
    dw = w * (1j * ap - app / (2.0 * ap))
    return w, dw


def basis_values(phase, t):
    """Return ``(u, v, u', v')`` at ``t``."""
    t = _check_points(phase.interval, t)
    w, dw = _basis_from(*_phase_values(phase, t))
    return w.real, w.imag, dw.real, dw.imag


def _basis_second(phase, t, alpha, ap, app):
    appp = phase.alpha_ppp(t)
    r = 1j * ap - app / (2.0 * ap)
    dr = 1j * app - (appp * ap - app * app) / (2.0 * ap * ap)
    w = np.exp(1j * alpha) / np.sqrt(ap)
    return w * (r * r + dr)


def particular_eval(phase, table, t):
    """Particular solution ``(z, z')`` with ``z(a) = z'(a) = 0``."""
    t = _check_points(phase.interval, t)
    alpha, ap, app = _phase_values(phase, t)
    w, dw = _basis_from(alpha, ap, app)
    UV = table.integral_to(t, g_values=alpha)
    U, V = np.real(UV), np.imag(UV)
    z = w.imag * U - w.real * V
    zp = dw.imag * U - dw.real * V
    return z, zp


def _boundary_data(phase, table):
    a, b = phase.interval
    u, v, up, vp = basis_values(phase, np.array([a, b]))
    z, zp = particular_eval(phase, table, np.array([a, b]))
    # each column ordered (y(a), y'(a), y(b), y'(b))
    U = np.array([u[0], up[0], u[1], up[1]])
    V = np.array([v[0], vp[0], v[1], vp[1]])
    Z = np.array([z[0], zp[0], z[1], zp[1]])
    return U, V, Z


def _solve_2x2(M, rhs):
    """Row-equilibrated 2x2 elimination with full pivoting.

    Returns ``(x, condition)``.  Raises `ResonanceError` when the second
    pivot is below ``RESONANCE_TOL`` times the first.
    """
    scale = np.abs(M).max(axis=1)
    if not np.all(scale > 0) or not np.all(np.isfinite(M)):
        raise ResonanceError("a boundary row annihilates both basis functions")
    M = M / scale[:, None]
    rhs = rhs / scale
    i, j = np.unravel_index(np.argmax(np.abs(M)), M.shape)
    oi, oj = 1 - i, 1 - j
    p1 = M[i, j]
    mult = M[oi, j] / p1
    p2 = M[oi, oj] - mult * M[i, oj]
    cond = np.linalg.cond(M)
    if not abs(p2) > RESONANCE_TOL * abs(p1):
        raise ResonanceError(
            "boundary conditions are satisfied by a homogeneous solution to working precision "
            f"(pivot ratio {abs(p2 / p1):.2e})"
        )
    x = np.empty(2)
    x[oj] = (rhs[oi] - mult * rhs[i]) / p2
    x[j] = (rhs[i] - M[i, oj] * x[oj]) / p1
    return x, float(cond)


def fit_constants(phase, table, bcs, full_output=False):
    """Constants ``(c1, c2)`` so that ``c1 u + c2 v + z`` meets ``bcs``.

    With ``full_output=True`` also returns the condition number of the
    equilibrated boundary matrix.
    """
    if not isinstance(bcs, BoundaryConditions):
        bcs = BoundaryConditions(bcs)
    U, V, Z = _boundary_data(phase, table)
    W = bcs.weights
    M = np.column_stack([W @ U, W @ V])
    rhs = bcs.beta - W @ Z
    (c1, c2), cond = _solve_2x2(M, rhs)
    return (float(c1), float(c2), cond) if full_output else (float(c1), float(c2))


def phase_integrand(phase, f):
    """Levin integrand ``exp(i alpha) f / sqrt(alpha')``."""

    def f_tilde(t):
        return np.asarray(f(t), dtype=float) / np.sqrt(phase.alpha_p(t))

    return OscillatoryIntegrand(phase.alpha, phase.alpha_p, f_tilde)


def solve(q, f, interval, bcs, config=None, variant="rrqr", residual_samples=RESIDUAL_SAMPLES):
    """Solve ``y'' + q y = f`` on ``interval`` subject to ``bcs``.

    Parameters
    ----------
    q, f : callable
        Vectorized coefficient and right-hand side; q > 0 on the interval.
    interval : (float, float)
    bcs : BoundaryConditions or array_like of shape (2, 5)
    config : SolverConfig, optional
        ``k`` and ``eps`` are shared by the phase and Levin stages.
    variant : {"rrqr", "tsvd"}
        Rank-truncating solver used by the Levin stage.
    residual_samples : int
        Points used for ``report.residual_estimate``; 0 skips it.

    Returns
    -------
    Solution

    Raises
    ------
    SolverFailure
        Tagged with ``stage="phase"`` or ``stage="levin"``.
    ResonanceError
        If the boundary conditions do not determine the solution.
    """
    config = config or SolverConfig()
    if not isinstance(bcs, BoundaryConditions):
        bcs = BoundaryConditions(bcs)
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgument(f"interval must satisfy a < b, got ({a}, {b})")
    report = SolveReport()

    t0 = time.perf_counter()
    phase = build_phase(q, (a, b), config)
    t1 = time.perf_counter()
    try:
        table = adaptive_levin(
            phase_integrand(phase, f),
            (a, b),
            eps=config.eps,
            k=config.k,
            solver=variant,
            max_intervals=config.max_intervals,
        )
    except SolverFailure as exc:
        raise SolverFailure(str(exc.args[0]), stage="levin", interval=exc.interval) from exc
    t2 = time.perf_counter()
    c1, c2, cond = fit_constants(phase, table, bcs, full_output=True)
    t3 = time.perf_counter()

    report.time_phase = t1 - t0
    report.time_levin = t2 - t1
    report.time_bc = t3 - t2
    report.n_coeffs_phase = phase.n_coeffs
    report.n_coeffs_levin = table.n_coeffs
    report.n_intervals_phase = phase.alpha_p.m
    report.n_intervals_levin = table.m
    report.condition = cond
    sol = Solution(phase, table, c1, c2, report, bcs, q, f)
    if residual_samples:
        report.residual_estimate = relative_residual(sol, np.linspace(a, b, residual_samples))
    return sol


def eval_solution(sol, t):
    """Return ``(y, y')`` at ``t``."""
    phase = sol.phase
    t = _check_points(phase.interval, t)
    alpha, ap, app = _phase_values(phase, t)
    w, dw = _basis_from(alpha, ap, app)
    UV = sol.table.integral_to(t, g_values=alpha)
    U, V = np.real(UV), np.imag(UV)
    y = sol.c1 * w.real + sol.c2 * w.imag + w.imag * U - w.real * V
    yp = sol.c1 * dw.real + sol.c2 * dw.imag + dw.imag * U - dw.real * V
    return y, yp


def eval_second_derivative(sol, t, f_values=None):
    """``y''`` from differentiated phase expansions.

    Uses ``z'' = v'' U - u'' V + (u v' - u' v) f``; neither q nor the ODE
    is used, so ``y'' + q y - f`` is a genuine residual.
    """
    phase = sol.phase
    t = _check_points(phase.interval, t)
    alpha, ap, app = _phase_values(phase, t)
    w, dw = _basis_from(alpha, ap, app)
    d2w = _basis_second(phase, t, alpha, ap, app)
    UV = sol.table.integral_to(t, g_values=alpha)
    U, V = np.real(UV), np.imag(UV)
    if f_values is None:
        if sol.f is None:
            raise InvalidArgument("f is required to evaluate y''")
        f_values = np.asarray(sol.f(t), dtype=float)
    wronskian = w.real * dw.imag - dw.real * w.imag
    return sol.c1 * d2w.real + sol.c2 * d2w.imag + d2w.imag * U - d2w.real * V + wronskian * f_values


def relative_residual(sol, t):
    """``max|y'' + q y - f| / (max|f| + max q * max|y|)`` over the points ``t``."""
    if sol.q is None or sol.f is None:
        raise InvalidArgument("q and f are required for the residual")
    t = _check_points(sol.interval, t)
    qv = np.asarray(sol.q(t), dtype=float)
    fv = np.asarray(sol.f(t), dtype=float)
    if np.any(qv < 0):
        raise InvalidCoefficient("q is negative at a sample point")
    y, _ = eval_solution(sol, t)
    ypp = eval_second_derivative(sol, t, fv)
    scale = np.max(np.abs(fv)) + np.max(qv) * np.max(np.abs(y))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(ypp + qv * y - fv)) / scale)
