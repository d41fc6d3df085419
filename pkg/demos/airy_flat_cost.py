"""Solve y'' - lam^2 t y = lam^2 t^2 on (-10, 0) for frequencies 1 .. 1e6.

The exact solution is y = -t + Ai(lam^(2/3) t).  A conventional solver needs
work proportional to lam; here the phase function is nonoscillatory and the
Levin stage integrates the oscillatory kernel without sampling it, so time
and coefficient counts grow only slowly.

Run:  python3 demos/airy_flat_cost.py
"""

import numpy as np

from oscphase.problems import make_problem, reference_values
from oscphase.solve import solve

print(f"{'lambda':>8} {'max err':>9} {'phase s':>8} {'levin s':>8} {'coeffs':>7} {'ref':>8}")
for lam in (1.0, 10.0, 1e2, 1e3, 1e4, 1e6):
    p = make_problem("airy", lam)
    sol = solve(p.q, p.f, p.interval, p.bcs)
    ref = reference_values("airy", lam)
    err = np.max(np.abs(sol(ref.t) - ref.y))
    r = sol.report
    print(
        f"{lam:8.0e} {err:9.1e} {r.time_phase:8.3f} {r.time_levin:8.3f} "
        f"{r.n_coeffs_phase + r.n_coeffs_levin:7d} {ref.source.split(':')[0]:>8}"
    )

# At lam = 1e6 the solution completes about 3.4e6 oscillations (alpha(0) / 2 pi),
# yet about a hundred pieces describe alpha', most of them near the turning point.
p = make_problem("airy", 1e6)
sol = solve(p.q, p.f, p.interval, p.bcs)
phase = sol.phase
print(f"\nalpha(0) = {phase.alpha(0.0):.6e} radians, {phase.alpha_p.m} pieces for alpha'")
print("piece widths near t = 0:", np.diff(phase.alpha_p.breakpoints)[-5:])
