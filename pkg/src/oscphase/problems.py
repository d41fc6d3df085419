"""Benchmark problems and their reference solutions.

Four families of y'' + q y = f parameterized by a frequency lambda:

``airy``
    ``y'' - lam^2 t y = lam^2 t^2`` on (-10, 0) with terminal data at 0;
    the solution is ``-t + Ai(lam^(2/3) t)``.
``ivp2``
    ``q = lam^2/(0.01 + t^2)``, ``f = lam^2 (1 + t) cos(13 t^2)`` on (0, 1),
    ``y(0) = y'(0) = 1``.
``bvp3``
    ``q = lam^3 (3/2 + cos(log(lam) t))/(1 + lam e^t)``,
    ``f = lam^2/sqrt(2 + t)`` on (-1, 1), ``y(-1) = y(1) = 0``.
``bvp4``
    ``q = lam^2 (2 + t^2 cos(lam))/(1 + t^2)``, ``f = lam^2 cos(3 t^2)`` on
    (-1, 1), ``y(-1) = y(1)``, ``y'(-1) = y'(1)``.

Reference samples live in ``.npz`` fixtures generated once with mpmath by
``scripts/make_fixtures.py``; the directory can be overridden with the
``OSCPHASE_FIXTURES`` environment variable.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.special

from .errors import InvalidArgument, OscPhaseError
from .solve import BoundaryConditions

__all__ = [
    "PROBLEM_IDS",
    "SAMPLE_COUNT",
    "Problem",
    "NoReference",
    "Reference",
    "make_problem",
    "sample_points",
    "fixture_dir",
    "fixture_path",
    "airy_constants",
    "reference_values",
]

PROBLEM_IDS = ("airy", "ivp2", "bvp3", "bvp4")

# errors are measured at this many equispaced interior points
SAMPLE_COUNT = 10_000

# Ai(0) = 1/(3^(2/3) Gamma(2/3)) and Ai'(0) = Gamma(-1/3)/(2 pi 3^(5/6))
AIRY_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIRY_AIP0 = math.gamma(-1.0 / 3.0) / (2.0 * math.pi * 3.0 ** (5.0 / 6.0))


class NoReference(OscPhaseError, LookupError):
    """No reference solution is available for a (problem, lambda) pair."""


@dataclass(frozen=True)
class Problem:
    """One instance ``y'' + q y = f`` on ``interval`` with ``bcs``."""

    name: str
    lam: float
    q: Callable
    f: Callable
    interval: tuple
    bcs: BoundaryConditions
    exact: Optional[Callable] = None


def _airy(lam):
    s = lam ** (2.0 / 3.0)

    def q(t):
        return -(lam**2) * np.asarray(t, dtype=float)

    def f(t):
        t = np.asarray(t, dtype=float)
        return lam**2 * t * t

    def exact(t):
        t = np.asarray(t, dtype=float)
        return -t + scipy.special.airy(s * t)[0]

    bcs = BoundaryConditions.terminal(AIRY_AI0, -1.0 + s * AIRY_AIP0)
    return Problem("airy", lam, q, f, (-10.0, 0.0), bcs, exact)


def _ivp2(lam):
    def q(t):
        t = np.asarray(t, dtype=float)
        return lam**2 / (0.01 + t * t)

    def f(t):
        t = np.asarray(t, dtype=float)
        return lam**2 * (1.0 + t) * np.cos(13.0 * t * t)

    return Problem("ivp2", lam, q, f, (0.0, 1.0), BoundaryConditions.initial(1.0, 1.0))


def _bvp3(lam):
    log_lam = math.log(lam)

    def q(t):
        t = np.asarray(t, dtype=float)
        return lam**3 * (1.5 + np.cos(log_lam * t)) / (1.0 + lam * np.exp(t))

    def f(t):
        t = np.asarray(t, dtype=float)
        return lam**2 / np.sqrt(2.0 + t)

    return Problem("bvp3", lam, q, f, (-1.0, 1.0), BoundaryConditions.dirichlet(0.0, 0.0))


def _bvp4(lam):
    cos_lam = math.cos(lam)

    def q(t):
        t = np.asarray(t, dtype=float)
        return lam**2 * (2.0 + t * t * cos_lam) / (1.0 + t * t)

    def f(t):
        t = np.asarray(t, dtype=float)
        return lam**2 * np.cos(3.0 * t * t)

    return Problem("bvp4", lam, q, f, (-1.0, 1.0), BoundaryConditions.periodic())


_BUILDERS = {"airy": _airy, "ivp2": _ivp2, "bvp3": _bvp3, "bvp4": _bvp4}


def make_problem(name, lam):
    """Build problem ``name`` at frequency ``lam`` (> 0)."""
    if name not in _BUILDERS:
        raise InvalidArgument(f"unknown problem {name!r}; expected one of {PROBLEM_IDS}")
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidArgument(f"lambda must be positive and finite, got {lam}")
    return _BUILDERS[name](lam)


def sample_points(interval, count=SAMPLE_COUNT):
    """``count`` equispaced points strictly inside ``interval``."""
    a, b = interval
    return np.linspace(a, b, count + 2)[1:-1]


def fixture_dir():
    """Fixture directory: ``$OSCPHASE_FIXTURES`` or the packaged one."""
    override = os.environ.get("OSCPHASE_FIXTURES")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "fixtures"


def fixture_path(name, lam, directory=None):
    directory = Path(directory) if directory is not None else fixture_dir()
    return directory / f"{name}_lam{float(lam):.6g}.npz"


def airy_constants(directory=None):
    """Arbitrary-precision Airy constants stored with the fixtures."""
    directory = Path(directory) if directory is not None else fixture_dir()
    path = directory / "airy_constants.json"
    if not path.exists():
        raise NoReference(f"missing {path}")
    return json.loads(path.read_text())


@dataclass(frozen=True)
class Reference:
    """Reference samples ``y`` at points ``t``; ``source`` says where they came from."""

    t: np.ndarray
    y: np.ndarray
    source: str


def reference_values(name, lam, directory=None):
    """Reference solution of problem ``name`` at the standard sample points.

    Looks for a fixture first.  The Airy problem falls back to
    ``scipy.special.airy`` when no fixture exists for ``lam``; every other
    problem raises `NoReference`.
    """
    problem = make_problem(name, lam)
    t = sample_points(problem.interval)
    path = fixture_path(name, lam, directory)
    if path.exists():
        with np.load(path) as data:
            ft, fy = data["t"], data["y"]
        if ft.shape != t.shape or not np.allclose(ft, t, rtol=0, atol=1e-14):
            raise NoReference(f"fixture {path} was sampled at different points")
        return Reference(ft, fy, f"fixture:{path.name}")
    if problem.exact is not None:
        return Reference(t, problem.exact(t), "scipy")
    raise NoReference(f"no reference for {name} at lambda={lam:g} (looked for {path})")
