"""Running oscillatory integrals with the adaptive Levin method.

int_{-1}^{t} exp(i 1e4 s^3 / 3) ds has a saddle point at s = 0 where the
frequency vanishes.  The collocation matrix there is nearly singular; the
rank-truncating solve still returns a usable particular solution.

Run:  python3 demos/levin_saddle.py
"""

import time

import numpy as np
from scipy.integrate import quad

from oscphase.levin import OscillatoryIntegrand, adaptive_levin

g = np.polynomial.Polynomial([0.0, 0.0, 0.0, 1e4 / 3])
integrand = OscillatoryIntegrand(g, g.deriv(), np.ones_like)

for solver in ("rrqr", "tsvd"):
    for correction in (True, False):
        start = time.perf_counter()
        table = adaptive_levin(integrand, (-1.0, 1.0), solver=solver, null_correction=correction)
        elapsed = time.perf_counter() - start
        print(f"{solver} null_correction={correction!s:5}: {table.m:5d} pieces, {elapsed * 1e3:6.1f} ms")

table = adaptive_levin(integrand, (-1.0, 1.0))

# scipy's QUADPACK on the real and imaginary parts, with a large subdivision limit
for t in (-0.5, 0.0, 0.3, 1.0):
    re = quad(lambda s: np.cos(g(s)), -1, t, limit=5000, epsabs=1e-13, epsrel=1e-12)[0]
    im = quad(lambda s: np.sin(g(s)), -1, t, limit=5000, epsabs=1e-13, epsrel=1e-12)[0]
    value = table.integral_to(t)
    print(f"t = {t:5.2f}: levin {value:.12f}  |diff vs quad| = {abs(value - (re + 1j * im)):.1e}")

# pieces cluster around the saddle, where p solves p' + i g' p = 1 with g' ~ 0
widths = np.diff(table.partition)
print(f"smallest piece {widths.min():.2e} at t = {table.partition[np.argmin(widths)]:.3f}")
