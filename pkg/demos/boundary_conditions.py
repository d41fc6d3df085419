"""One mechanism for initial, terminal, Dirichlet and periodic-type data.

Each boundary condition is a row (w_a, w'_a, w_b, w'_b, beta) meaning
w_a y(a) + w'_a y'(a) + w_b y(b) + w'_b y'(b) = beta.  Two rows fix the two
free constants of y = c1 u + c2 v + z.

Run:  python3 demos/boundary_conditions.py
"""

import numpy as np

from oscphase.errors import ResonanceError
from oscphase.problems import make_problem
from oscphase.solve import BoundaryConditions, eval_solution, solve

for name in ("airy", "ivp2", "bvp3", "bvp4"):
    p = make_problem(name, 1e3)
    sol = solve(p.q, p.f, p.interval, p.bcs)
    (ya, yb), (ypa, ypb) = eval_solution(sol, np.array(p.interval))
    print(f"{name}: rows\n{p.bcs.rows}")
    print(
        f"  row residuals {np.abs(p.bcs.residual(ya, ypa, yb, ypb))}, "
        f"ODE residual {sol.report.residual_estimate:.1e}, cond {sol.report.condition:.1f}"
    )

# A custom Robin-type condition: y(0) + 0.1 y'(0) = 1, y(1) = 0
q = lambda t: 2500.0 * (1 + t) ** 2
f = lambda t: np.exp(-t)
bcs = BoundaryConditions([[1.0, 0.1, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0, 0.0]])
sol = solve(q, f, (0.0, 1.0), bcs)
y, yp = eval_solution(sol, np.array([0.0, 1.0]))
print(f"\nRobin: y(0) + 0.1 y'(0) = {y[0] + 0.1 * yp[0]:.15f}, y(1) = {y[1]:.1e}")

# y'' + pi^2 y = 1 with y(0) = y(1) = 0 has no solution: sin(pi t) satisfies
# the homogeneous problem, and the solver says so instead of returning noise
try:
    solve(lambda t: np.pi**2 + 0 * t, lambda t: 1 + 0 * t, (0.0, 1.0), BoundaryConditions.dirichlet(0.0, 0.0))
except ResonanceError as exc:
    print(f"\nresonance detected: {exc}")
