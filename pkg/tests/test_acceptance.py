"""Acceptance suite: one test, and one summary line, per criterion.

Timings are best-of-N wall clock on one core, so that background load
inflates them as little as possible.
"""

import time

import numpy as np
import pytest

from oscphase.benchmark import ExperimentSpec, run_sweep
from oscphase.errors import ResonanceError
from oscphase.levin import LevinTable, OscillatoryIntegrand, adaptive_levin
from oscphase.ode_solver import LinearOdeSystem, OdeSystem, SolverConfig, solve_ivp
from oscphase.phase import build_phase
from oscphase.problems import PROBLEM_IDS, make_problem, reference_values, sample_points
from oscphase.solve import (
    BoundaryConditions,
    Solution,
    basis_values,
    eval_second_derivative,
    relative_residual,
    solve,
)
from oracles import gauss_oracle, shooting_solve

EPS0 = np.finfo(float).eps


def best_time(fn, repeats=3):
    times, result = [], None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return result, min(times)


def airy_error(lam):
    p = make_problem("airy", lam)
    sol, elapsed = best_time(lambda: solve(p.q, p.f, p.interval, p.bcs))
    ref = reference_values("airy", lam)
    assert ref.source.startswith("fixture")
    return float(np.max(np.abs(sol(ref.t) - ref.y))), elapsed, sol


def airy_tolerance(lam):
    return max(1e-11, 100 * EPS0 * lam)


def test_criterion_1_airy_accuracy(record_acceptance):
    worst = []
    ok = True
    for lam in (1, 10, 1e2, 1e3, 1e4, 1e6):
        err, elapsed, _ = airy_error(lam)
        good = err <= airy_tolerance(lam) and elapsed <= 1.0
        ok &= good
        worst.append(f"lam={lam:g}: err={err:.1e} (tol {airy_tolerance(lam):.0e}) t={elapsed:.2f}s")
    record_acceptance(1, ok, "; ".join(worst))
    assert ok


def test_criterion_2_flat_cost(record_acceptance):
    times, counts = {}, {}
    for lam in (1e2, 1e3, 1e4, 1e6):
        p = make_problem("airy", lam)
        sol, times[lam] = best_time(lambda: solve(p.q, p.f, p.interval, p.bcs, residual_samples=0), repeats=5)
        counts[lam] = sol.report.n_coeffs_phase + sol.report.n_coeffs_levin
    time_ratio = times[1e6] / times[1e3]
    selected = [counts[lam] for lam in (1e2, 1e4, 1e6)]
    count_ratio = max(selected) / min(selected)
    ok = time_ratio <= 3 and count_ratio <= 2
    detail = (
        f"time(1e6)/time(1e3)={time_ratio:.2f} (<= 3); "
        f"coefficients {dict((f'{k:g}', v) for k, v in counts.items())}, ratio over 1e2..1e6={count_ratio:.2f} (<= 2)"
    )
    record_acceptance(2, ok, detail)
    assert ok


def test_criterion_3_small_lambda(record_acceptance):
    errors = {lam: airy_error(lam)[:2] for lam in range(1, 11)}
    ok = all(err <= airy_tolerance(lam) and t <= 1.0 for lam, (err, t) in errors.items())
    worst = max(errors, key=lambda lam: errors[lam][0])
    record_acceptance(3, ok, f"worst lam={worst}: err={errors[worst][0]:.1e}, slowest {max(t for _, t in errors.values()):.2f}s")
    assert ok


def test_criterion_4_basis_invariants(record_acceptance):
    rng = np.random.default_rng(2024)
    worst_w = worst_n = 0.0
    for name in PROBLEM_IDS:
        p = make_problem(name, 1e3)
        phase = build_phase(p.q, p.interval)
        t = rng.uniform(*p.interval, 1000)
        u, v, up, vp = basis_values(phase, t)
        worst_w = max(worst_w, np.max(np.abs(u * vp - up * v - 1)))
        worst_n = max(worst_n, np.max(np.abs((u * u + v * v) * phase.alpha_p(t) - 1)))
    ok = worst_w <= 1e-11 and worst_n <= 1e-12
    record_acceptance(4, ok, f"max |W - 1| = {worst_w:.1e} (<= 1e-11), max |(u^2+v^2) alpha' - 1| = {worst_n:.1e} (<= 1e-12)")
    assert ok


def test_criterion_5_residuals(record_acceptance):
    rng = np.random.default_rng(5)
    parts = []
    ok = True
    for name in ("ivp2", "bvp3", "bvp4"):
        p = make_problem(name, 1e3)
        sol = solve(p.q, p.f, p.interval, p.bcs)
        t = rng.uniform(*p.interval, 1000)
        qv = p.q(t)
        # y = u: unit constant on u, no particular part
        basis_u = Solution(sol.phase, _zero_table(sol.table), 1.0, 0.0)
        u = basis_u(t)
        upp = eval_second_derivative(basis_u, t, np.zeros_like(t))
        hom_res = np.max(np.abs(upp + qv * u)) / (np.max(qv) * np.max(np.abs(u)))
        full_res = relative_residual(sol, t)
        good = hom_res <= 1e-8 and full_res <= 1e-8
        ok &= good
        parts.append(f"{name}: u {hom_res:.1e}, y {full_res:.1e}")
    record_acceptance(5, ok, "; ".join(parts) + " (<= 1e-8)")
    assert ok


def _zero_table(table):
    zero = np.zeros_like(table.boundary_terms)
    return LevinTable(table.partition, np.zeros_like(table.coeffs), zero, zero, table.g)


def _polynomial(coeffs, f_tilde):
    p = np.polynomial.Polynomial(coeffs)
    return OscillatoryIntegrand(p, p.deriv(), f_tilde)


def _levin_cases():
    lam = 1e3
    phase = build_phase(lambda t: -(lam**2) * np.asarray(t), (-10.0, 0.0))
    airy_f = lambda t: lam**2 * t * t / np.sqrt(phase.alpha_p(t))
    return {
        "constant g'": (_polynomial([0.0, 1e3], lambda t: 1 / (1 + t * t)), (-1.0, 1.0)),
        "chirp 100t^2": (_polynomial([0.0, 0.0, 100.0], np.ones_like), (0.0, 1.0)),
        "saddle 1e4 t^3/3": (_polynomial([0.0, 0.0, 0.0, 1e4 / 3], np.ones_like), (-1.0, 1.0)),
        "Airy phase": (OscillatoryIntegrand(phase.alpha, phase.alpha_p, airy_f), (-10.0, 0.0)),
        "g' = 0": (_polynomial([0.0], np.exp), (0.0, 1.0)),
    }


def test_criterion_6_levin_oracle(record_acceptance):
    parts = []
    ok = True
    for name, (integrand, interval) in _levin_cases().items():
        table, elapsed = best_time(lambda: adaptive_levin(integrand, interval), repeats=5)
        oracle = gauss_oracle(integrand.g, integrand.f_tilde, *interval, panels=20000, order=30)
        rel = abs(table.total - oracle) / max(1.0, abs(oracle))
        good = rel <= 1e-10 and elapsed <= 0.05
        ok &= good
        parts.append(f"{name}: {rel:.1e}, {elapsed * 1e3:.0f} ms")
    record_acceptance(6, ok, "; ".join(parts) + " (<= 1e-10, <= 50 ms)")
    assert ok


def test_criterion_7_cross_check(record_acceptance):
    p = make_problem("bvp3", 50.0)
    sol = solve(p.q, p.f, p.interval, p.bcs)
    direct = shooting_solve(p.q, p.f, p.interval, p.bcs.rows)
    t = sample_points(p.interval)
    diff = float(np.max(np.abs(sol(t) - direct(t))))
    ok = diff <= 1e-8
    record_acceptance(7, ok, f"bvp3 lam=50 pipeline vs shooting: {diff:.1e} (<= 1e-8)")
    assert ok


def test_criterion_8_variant_parity(record_acceptance):
    rows = {}
    for variant in ("rrqr", "tsvd"):
        rows[variant] = run_sweep(ExperimentSpec(problem="airy", count=6, repeats=1, variant=variant))
    assert all(r.ok for rs in rows.values() for r in rs)
    diffs = [abs(a.max_abs_err - b.max_abs_err) for a, b in zip(rows["rrqr"], rows["tsvd"])]
    levin = {v: sum(r.time_levin for r in rs) for v, rs in rows.items()}
    ok = max(diffs) <= 1e-11
    record_acceptance(
        8,
        ok,
        f"max row difference {max(diffs):.1e} (<= 1e-11); Levin stage rrqr {levin['rrqr']:.2f}s vs tsvd {levin['tsvd']:.2f}s",
    )
    assert ok


def test_criterion_9_resonance(record_acceptance):
    try:
        solve(lambda t: np.pi**2 + 0 * t, lambda t: 1 + 0 * t, (0.0, 1.0), BoundaryConditions.dirichlet(0.0, 0.0))
    except ResonanceError as exc:
        record_acceptance(9, True, f"ResonanceError: {exc}")
        return
    record_acceptance(9, False, "no error raised")
    pytest.fail("resonance not detected")


def _constant(M):
    M = np.asarray(M, dtype=float)
    return lambda t: np.repeat(M[:, :, None], np.size(t), axis=2)


def test_criterion_10_ode_closed_form(record_acceptance):
    config = SolverConfig(eps=1e-13, k=16)
    cases = {
        "exp(t)": (LinearOdeSystem(1, _constant([[1.0]])), (0.0, 1.0), [1.0], np.exp),
        "1/(1-t)": (
            OdeSystem(1, lambda t, y: y * y, lambda t, y: (2 * y)[None, :, :]),
            (0.0, 0.5),
            [1.0],
            lambda t: 1 / (1 - t),
        ),
        "cos(10t)": (LinearOdeSystem(2, _constant([[0.0, 1.0], [-100.0, 0.0]])), (0.0, 1.0), [1.0, 0.0], lambda t: np.cos(10 * t)),
    }
    parts = []
    ok = True
    for name, (system, interval, start, exact) in cases.items():
        sol = solve_ivp(system, interval, start, config)
        t = np.linspace(*interval, 10001)
        err = float(np.max(np.abs(sol[0](t) - exact(t))))
        ok &= err <= 1e-11
        parts.append(f"{name}: {err:.1e}")
    record_acceptance(10, ok, "; ".join(parts) + " (<= 1e-11)")
    assert ok
