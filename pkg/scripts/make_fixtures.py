"""Generate reference fixtures with mpmath.

Airy references are ``-t + Ai(lam^(2/3) t)`` evaluated in 30-digit
arithmetic at the exact binary64 sample points.  The other problems are
integrated with mpmath's Taylor-series ODE solver at 30 digits; boundary
value problems are solved by shooting (two homogeneous solutions plus a
particular one, combined in extended precision).

Usage::

    python3 scripts/make_fixtures.py [--out DIR] [--only airy,ivp2,...] [--large]

``--large`` adds lambda = 1000 for ivp2, bvp3 and bvp4 (several minutes each).
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import mpmath as mp
import numpy as np

from oscphase.problems import fixture_dir, fixture_path, make_problem, sample_points

DPS = 30

AIRY_LAMBDAS = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100, 1000, 10_000, 1_000_000]
ODE_LAMBDAS = {"ivp2": [10, 100], "bvp3": [10, 50, 100], "bvp4": [10, 100]}
LARGE_LAMBDAS = {"ivp2": [1000], "bvp3": [1000], "bvp4": [1000]}


def mp_coefficients(name, lam):
    """q and f in mpmath arithmetic."""
    lam = mp.mpf(lam)
    if name == "ivp2":
        return (lambda t: lam**2 / (mp.mpf("0.01") + t * t), lambda t: lam**2 * (1 + t) * mp.cos(13 * t * t))
    if name == "bvp3":
        log_lam = mp.log(lam)
        return (
            lambda t: lam**3 * (mp.mpf(3) / 2 + mp.cos(log_lam * t)) / (1 + lam * mp.exp(t)),
            lambda t: lam**2 / mp.sqrt(2 + t),
        )
    if name == "bvp4":
        cos_lam = mp.cos(lam)
        return (
            lambda t: lam**2 * (2 + t * t * cos_lam) / (1 + t * t),
            lambda t: lam**2 * mp.cos(3 * t * t),
        )
    raise ValueError(name)


def airy_constants():
    g23 = mp.gamma(mp.mpf(2) / 3)
    gm13 = mp.gamma(-mp.mpf(1) / 3)
    return {
        "gamma_2_3": mp.nstr(g23, 25),
        "gamma_m1_3": mp.nstr(gm13, 25),
        "ai0": mp.nstr(mp.airyai(0), 25),
        "aip0": mp.nstr(mp.airyai(0, derivative=1), 25),
        "ai0_from_gamma": mp.nstr(1 / (mp.mpf(3) ** (mp.mpf(2) / 3) * g23), 25),
        "aip0_from_gamma": mp.nstr(gm13 / (2 * mp.pi * mp.mpf(3) ** (mp.mpf(5) / 6)), 25),
        "ai_m1": mp.nstr(mp.airyai(-1), 25),
        "dps": DPS,
    }


def airy_fixture(lam):
    problem = make_problem("airy", lam)
    t = sample_points(problem.interval)
    s = mp.mpf(lam) ** (mp.mpf(2) / 3)
    y = np.array([float(-mp.mpf(x) + mp.airyai(s * mp.mpf(x))) for x in t])
    return t, y


def ode_fixture(name, lam):
    problem = make_problem(name, lam)
    a, b = problem.interval
    t = sample_points(problem.interval)
    q, f = mp_coefficients(name, lam)

    # components: particular (y, y'), homogeneous u1 (y, y'), homogeneous u2 (y, y')
    def rhs(s, y):
        qs = q(s)
        return [y[1], f(s) - qs * y[0], y[3], -qs * y[2], y[5], -qs * y[4]]

    sol = mp.odefun(rhs, mp.mpf(a), [0, 0, 1, 0, 0, 1])
    at_b = sol(mp.mpf(b))
    rows = mp.matrix(problem.bcs.rows.tolist())

    def functional(ya, ypa, yb, ypb):
        return [rows[i, 0] * ya + rows[i, 1] * ypa + rows[i, 2] * yb + rows[i, 3] * ypb for i in range(2)]

    z = functional(0, 0, at_b[0], at_b[1])
    u1 = functional(1, 0, at_b[2], at_b[3])
    u2 = functional(0, 1, at_b[4], at_b[5])
    M = mp.matrix([[u1[0], u2[0]], [u1[1], u2[1]]])
    rhs_vec = mp.matrix([rows[0, 4] - z[0], rows[1, 4] - z[1]])
    c = mp.lu_solve(M, rhs_vec)
    y = np.empty(t.size)
    for i, x in enumerate(t):
        v = sol(mp.mpf(x))
        y[i] = float(v[0] + c[0] * v[2] + c[1] * v[4])
    return t, y


def write(path, t, y, name, lam, seconds):
    np.savez_compressed(path, t=t, y=y, problem=name, lam=float(lam), dps=DPS)
    print(f"{path.name}: {seconds:.1f} s, max|y| = {np.max(np.abs(y)):.3e}", flush=True)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--only", default="airy,ivp2,bvp3,bvp4")
    parser.add_argument("--large", action="store_true")
    parser.add_argument("--skip-existing", action="store_true")
    args = parser.parse_args(argv)
    mp.mp.dps = DPS
    out = args.out or fixture_dir()
    out.mkdir(parents=True, exist_ok=True)
    only = set(args.only.split(","))

    if "airy" in only:
        (out / "airy_constants.json").write_text(json.dumps(airy_constants(), indent=2) + "\n")
        for lam in AIRY_LAMBDAS:
            path = fixture_path("airy", lam, out)
            if args.skip_existing and path.exists():
                continue
            start = time.time()
            t, y = airy_fixture(lam)
            write(path, t, y, "airy", lam, time.time() - start)

    for name, lams in ODE_LAMBDAS.items():
        if name not in only:
            continue
        lams = lams + (LARGE_LAMBDAS[name] if args.large else [])
        for lam in lams:
            path = fixture_path(name, lam, out)
            if args.skip_existing and path.exists():
                continue
            start = time.time()
            t, y = ode_fixture(name, lam)
            write(path, t, y, name, lam, time.time() - start)


if __name__ == "__main__":
    main()
