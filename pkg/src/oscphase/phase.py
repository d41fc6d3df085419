"""Nonoscillatory phase functions for y'' + q(t) y = 0 with q > 0.

A phase function alpha (alpha' > 0) yields the solution basis
``u = cos(alpha)/sqrt(alpha')``, ``v = sin(alpha)/sqrt(alpha')`` with unit
Wronskian.  `build_phase` selects the nonoscillatory solution of Kummer's
equation by first solving a terminal value problem for an erf-windowed
coefficient that is constant near the right endpoint, and then an initial
value problem for the true coefficient started from the values it produced
at the left endpoint.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.special

from .chebyshev import PiecewiseChebyshevExpansion, adaptive_fit, coeffs_to_vals
from .errors import InadmissibleState, InvalidArgument, InvalidCoefficient, SolverFailure
from .ode_solver import OdeSystem, SolverConfig, solve_ivp, solve_tvp

__all__ = [
    "PhaseFunction",
    "WindowedProblem",
    "window",
    "kummer_system",
    "build_phase",
    "eval_basis",
    "kummer_residual",
    "liouville_green_phase",
    "riccati_from_phase",
    "normalize_general",
    "general_basis",
]

# erf(12/(b-a) (t - mid)) reaches +-6 at the endpoints; 1 - erf(6) ~ 2e-17
WINDOW_STEEPNESS = 12.0


@dataclass(frozen=True)
class WindowedProblem:
    """Coefficient blended into the constant ``nu**2`` on the right of [a, b]."""

    interval: tuple
    nu: float
    q: Callable

    def phi(self, t):
        a, b = self.interval
        x = WINDOW_STEEPNESS / (b - a) * (np.asarray(t, dtype=float) - 0.5 * (a + b))
        return 0.5 * (1.0 + scipy.special.erf(x))

    def q_tilde(self, t):
        qt = self.q(t)
        # q + phi (nu^2 - q) stays exactly nu^2 wherever q == nu^2
        return qt + self.phi(t) * (self.nu**2 - qt)


def window(q, interval):
    """Build the windowed coefficient used to pin down the phase at ``a``.

    ``nu = sqrt(q((a+b)/2))`` and ``phi(t) = (1 + erf(12 (t - (a+b)/2)/(b-a)))/2``.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgument(f"interval must satisfy a < b, got ({a}, {b})")
    qmid = float(np.asarray(q(np.array([0.5 * (a + b)])))[0])
    if not qmid > 0:
        raise InvalidCoefficient(f"q((a+b)/2) = {qmid} is not positive")
    return WindowedProblem((a, b), float(np.sqrt(qmid)), q)


def kummer_system(q):
    """Kummer's equation for r = alpha' as a first-order system in (r, r').

    ``r'' = 2 r (q - r^2) + (3/2) r'^2 / r``.  The right-hand side raises
    `InadmissibleState` when r <= 0.
    """

    def rhs(t, y):
        r, rp = y[0], y[1]
        # also rejects NaN
        if not r.min() > 0:
            raise InadmissibleState("phase derivative must stay positive")
        out = np.empty_like(y)
        out[0] = rp
        out[1] = 2.0 * r * (q(t) - r * r) + 1.5 * rp * rp / r
        return out

    def jac(t, y):
        r, rp = y[0], y[1]
        if not r.min() > 0:
            raise InadmissibleState("phase derivative must stay positive")
        out = np.empty((2,) + y.shape)
        out[0, 0] = 0.0
        out[0, 1] = 1.0
        out[1, 0] = 2.0 * q(t) - 6.0 * r * r - 1.5 * rp * rp / (r * r)
        out[1, 1] = 3.0 * rp / r
        return out

    # alpha'' is the derivative of alpha' and only accurate to ~eps * q, so
    # resolution is judged on alpha' alone
    return OdeSystem(2, rhs, jac, test_components=(0,))


class PhaseFunction:
    """Piecewise Chebyshev expansions of alpha, alpha' and alpha'' on [a, b]."""

    def __init__(self, alpha, alpha_p, alpha_pp):
        self.alpha = alpha
        self.alpha_p = alpha_p
        self.alpha_pp = alpha_pp
        self.interval = alpha_p.interval
        self._alpha_ppp = None

    @property
    def alpha_ppp(self):
        """alpha''' obtained by differentiating the alpha'' expansion."""
        if self._alpha_ppp is None:
            self._alpha_ppp = self.alpha_pp.derivative()
        return self._alpha_ppp

    @property
    def n_coeffs(self):
        return self.alpha_p.n_coeffs

    def basis(self, t):
        return eval_basis(self, t)

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "alpha": self.alpha.to_dict(),
            "alpha_p": self.alpha_p.to_dict(),
            "alpha_pp": self.alpha_pp.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            PiecewiseChebyshevExpansion.from_dict(data["alpha"]),
            PiecewiseChebyshevExpansion.from_dict(data["alpha_p"]),
            PiecewiseChebyshevExpansion.from_dict(data["alpha_pp"]),
        )

    def __repr__(self):
        return f"PhaseFunction(interval={self.interval}, pieces={self.alpha_p.m})"


def build_phase(q, interval, config=None):
    """Construct a nonoscillatory phase function for ``y'' + q y = 0``.

    Parameters
    ----------
    q : callable
        Vectorized coefficient, positive on ``interval``.
    interval : (float, float)
    config : SolverConfig, optional
        Order and tolerance for both Kummer solves.  Its ``collocation``
        field is overridden by ``"radau"``: Kummer's equation is stiff at
        high frequency, and the damping scheme keeps the iteration on the
        nonoscillatory branch without resolving spurious oscillations.

    Returns
    -------
    PhaseFunction
        With ``alpha(a) = 0``.
    """
    config = dataclasses.replace(config or SolverConfig(), collocation="radau")
    a, b = float(interval[0]), float(interval[1])
    win = window(q, (a, b))
    try:
        windowed = solve_tvp(kummer_system(win.q_tilde), (a, b), [win.nu, 0.0], config)
        start = windowed(a)
        sol = solve_ivp(kummer_system(q), (a, b), start, config)
    except SolverFailure as exc:
        raise SolverFailure(str(exc.args[0]), stage="phase", interval=exc.interval) from exc
    alpha_p, alpha_pp = sol[0], sol[1]
    if np.any(coeffs_to_vals(alpha_p.coeffs) <= 0):
        raise SolverFailure("phase derivative is not positive", stage="phase")
    alpha = alpha_p.antiderivative(0.0)
    return PhaseFunction(alpha, alpha_p, alpha_pp)


def eval_basis(phase, t):
    """Return ``(u, v, u', v')`` of the phase basis at ``t``."""
    a = phase.alpha(t)
    ap = phase.alpha_p(t)
    app = phase.alpha_pp(t)
    return _basis_from(a, ap, app)


def _basis_from(a, ap, app):
    s = np.sqrt(ap)
    c, sn = np.cos(a), np.sin(a)
    corr = app / (2.0 * ap * s)
    return c / s, sn / s, -sn * s - c * corr, c * s - sn * corr


def kummer_residual(phase, q, t):
    """``q - alpha'^2 + 3/4 (alpha''/alpha')^2 - 1/2 alpha'''/alpha'`` at ``t``."""
    ap = phase.alpha_p(t)
    app = phase.alpha_pp(t)
    appp = phase.alpha_ppp(t)
    return q(t) - ap * ap + 0.75 * (app / ap) ** 2 - 0.5 * appp / ap


def liouville_green_phase(q, interval, t):
    """Liouville-Green phase ``int_a^t sqrt(q(s)) ds`` by adaptive quadrature."""
    a = float(interval[0])

    def integrand(s):
        val = float(np.asarray(q(np.array([s])))[0])
        if val < 0:
            raise InvalidCoefficient(f"q({s}) = {val} is negative")
        return np.sqrt(val)

    value, _ = scipy.integrate.quad(integrand, a, float(t), epsabs=0.0, epsrel=1e-13, limit=500)
    return value


def riccati_from_phase(phase, t):
    """Logarithmic-derivative solution ``i alpha' - alpha''/(2 alpha')`` of r' + r^2 + q = 0."""
    ap = phase.alpha_p(t)
    return 1j * ap - phase.alpha_pp(t) / (2.0 * ap)


def normalize_general(p, P, q, dp=None, interval=None, k=16):
    """Reduce ``y'' + p y' + q y = 0`` to the standard form.

    Returns ``(q_std, omega)`` with ``q_std = q - p^2/4 - p'/2`` and
    ``omega = exp(-P)`` where P is an antiderivative of p.  If ``dp`` is not
    supplied, p' is obtained by differentiating an adaptive Chebyshev fit of
    p on ``interval``.
    """
    if dp is None:
        if interval is None:
            raise InvalidArgument("either dp or interval is required")
        dp = adaptive_fit(p, interval, k=k).derivative()

    def q_std(t):
        return q(t) - 0.25 * p(t) ** 2 - 0.5 * dp(t)

    def omega(t):
        return np.exp(-P(t))

    return q_std, omega


def general_basis(phase, omega, t):
    """Basis ``sqrt(omega/alpha') cos(alpha)``, ``sqrt(omega/alpha') sin(alpha)``."""
    scale = np.sqrt(omega(t) / phase.alpha_p(t))
    a = phase.alpha(t)
    return scale * np.cos(a), scale * np.sin(a)
