import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscphase.chebyshev import adaptive_fit
from oscphase.errors import InadmissibleState, InvalidArgument, InvalidCoefficient, OscPhaseError
from oscphase.phase import (
    PhaseFunction,
    build_phase,
    eval_basis,
    general_basis,
    kummer_residual,
    kummer_system,
    liouville_green_phase,
    normalize_general,
    riccati_from_phase,
    window,
)
from oscphase.problems import make_problem


def const(c):
    return lambda t: c * np.ones_like(np.asarray(t, dtype=float))


def basis_second_derivatives(phase, t):
    """(u'', v'') from the phase expansions, alpha''' by differentiation."""
    a, ap, app, appp = phase.alpha(t), phase.alpha_p(t), phase.alpha_pp(t), phase.alpha_ppp(t)
    r = 1j * ap - app / (2 * ap)
    dr = 1j * app - (appp * ap - app**2) / (2 * ap**2)
    w2 = np.exp(1j * a) / np.sqrt(ap) * (r * r + dr)
    return w2.real, w2.imag


@pytest.fixture(scope="module")
def unit_phase():
    return build_phase(const(1.0), (0, np.pi))


@pytest.fixture(scope="module")
def problem_phases():
    phases = {}
    for name in ("airy", "ivp2", "bvp3", "bvp4"):
        p = make_problem(name, 1e3)
        phases[name] = (p, build_phase(p.q, p.interval))
    return phases


class TestWindow:
    def test_constant(self):
        w = window(const(4.0), (0, 1))
        assert w.nu == 2.0
        t = np.linspace(0, 1, 33)
        np.testing.assert_array_equal(w.q_tilde(t), 4.0)

    @pytest.mark.parametrize("interval", [(0, 1), (-10, 0), (3, 1e4), (-1e-3, 1e-3)])
    def test_endpoint_values(self, interval):
        w = window(const(1.0), interval)
        assert w.phi(interval[0]) < 2.3e-17
        assert 1 - w.phi(interval[1]) < 2.3e-17

    def test_linear(self):
        w = window(lambda t: np.asarray(t, dtype=float), (2, 3))
        assert w.nu == pytest.approx(np.sqrt(2.5), rel=1e-15)
        assert w.q_tilde(3.0) == pytest.approx(2.5, rel=1e-15)
        assert w.q_tilde(2.0) == pytest.approx(2.0, rel=1e-15)

    def test_nonpositive_midpoint(self):
        with pytest.raises(InvalidCoefficient):
            window(lambda t: np.asarray(t, dtype=float), (-2, 1))

    def test_invalid_interval(self):
        with pytest.raises(InvalidArgument):
            window(const(1.0), (1, 1))


class TestKummerSystem:
    def test_constant_solution(self):
        lam = 7.0
        out = kummer_system(const(lam**2)).rhs(np.array([0.3]), np.array([[lam], [0.0]]))
        np.testing.assert_array_equal(out, [[0.0], [0.0]])

    def test_arithmetic(self):
        out = kummer_system(const(1.0)).rhs(np.array([0.0]), np.array([[2.0], [0.0]]))
        assert out[1, 0] == -12.0

    def test_jacobian_matches_finite_differences(self):
        sys = kummer_system(lambda t: 3 + np.sin(t))
        t = np.array([0.1, 0.7])
        y = np.array([[1.5, 2.0], [0.3, -0.4]])
        J = sys.jacobian(t, y)
        h = 1e-6
        for j in range(2):
            dy = np.zeros_like(y)
            dy[j] = h
            fd = (sys.rhs(t, y + dy) - sys.rhs(t, y - dy)) / (2 * h)
            np.testing.assert_allclose(J[:, j, :], fd, rtol=1e-7, atol=1e-7)

    @pytest.mark.parametrize("r", [0.0, -1.0, np.nan])
    def test_inadmissible(self, r):
        with pytest.raises(InadmissibleState):
            kummer_system(const(1.0)).rhs(np.array([0.0]), np.array([[r], [0.0]]))


class TestBuildPhase:
    def test_constant_coefficient_example(self):
        phase = build_phase(const(2500.0), (0, 1))
        t = np.linspace(0, 1, 257)
        np.testing.assert_allclose(phase.alpha_p(t), 50.0, rtol=1e-11)
        np.testing.assert_allclose(phase.alpha_pp(t), 0.0, atol=1e-11 * 50)
        np.testing.assert_allclose(phase.alpha(t), 50.0 * t, rtol=1e-11, atol=1e-14)

    @pytest.mark.parametrize("lam", [1.0, 1e3, 1e6])
    def test_constant_coefficient(self, lam):
        phase = build_phase(const(lam**2), (-1, 2))
        t = np.linspace(-1, 2, 101)
        np.testing.assert_allclose(phase.alpha_p(t), lam, rtol=1e-11)

    def test_airy_high_frequency_matches_liouville_green(self):
        lam = 1e6
        phase = build_phase(lambda t: -(lam**2) * np.asarray(t), (-10, 0))
        assert phase.alpha_p(-5.0) == pytest.approx(lam * np.sqrt(5.0), rel=1e-6)

    def test_airy_phase_against_closed_form(self):
        # alpha' = 1 / (pi (Ai^2 + Bi^2)) in the scaled variable, exact for the Airy equation
        from scipy.special import airy

        lam = 1e2
        s = lam ** (2 / 3)
        phase = build_phase(lambda t: -(lam**2) * np.asarray(t), (-10, 0))
        t = np.linspace(-10, 0, 301)
        ai, _, bi, _ = airy(s * t)
        np.testing.assert_allclose(phase.alpha_p(t), s / (np.pi * (ai**2 + bi**2)), rtol=1e-12)

    def test_invariants(self, problem_phases):
        for name, (problem, phase) in problem_phases.items():
            a, b = problem.interval
            assert phase.alpha(a) == 0.0, name
            t = np.linspace(a, b, 2001)
            assert np.all(phase.alpha_p(t) > 0), name
            assert np.all(np.diff(phase.alpha(t)) > 0), name
            ap = phase.alpha_p(t)
            d_alpha = phase.alpha.derivative()(t)
            assert np.max(np.abs(d_alpha - ap)) <= 1e-10 * np.max(ap), name
            d_ap = phase.alpha_p.derivative()(t)
            assert np.max(np.abs(d_ap - phase.alpha_pp(t))) <= 1e-9 * np.max(np.abs(phase.alpha_pp(t))), name

    def test_kummer_residual_all_problems(self, problem_phases):
        rng = np.random.default_rng(0)
        for name, (problem, phase) in problem_phases.items():
            t = rng.uniform(*problem.interval, 1000)
            qmax = np.max(problem.q(np.linspace(*problem.interval, 10001)))
            assert np.max(np.abs(kummer_residual(phase, problem.q, t))) <= 1e-8 * qmax, name

    def test_airy_kummer_residual_scaled(self, problem_phases):
        problem, phase = problem_phases["airy"]
        t = np.linspace(-10, 0, 1000)
        assert np.max(np.abs(kummer_residual(phase, problem.q, t))) <= 1e-9 * 1e6

    def test_basis_residual_ivp2(self, problem_phases):
        problem, phase = problem_phases["ivp2"]
        t = np.linspace(0, 1, 1000)
        u, v, _, _ = eval_basis(phase, t)
        upp, vpp = basis_second_derivatives(phase, t)
        q = problem.q(t)
        assert np.max(np.abs(upp + q * u)) <= 1e-9 * 1e6 * np.max(np.abs(u))
        assert np.max(np.abs(vpp + q * v)) <= 1e-9 * 1e6 * np.max(np.abs(v))

    def test_nonpositive_coefficient_fails(self):
        with pytest.raises(OscPhaseError):
            build_phase(lambda t: np.cos(3 * np.asarray(t)), (-0.5, 2.5))

    def test_serialization_round_trip(self, unit_phase):
        copy = PhaseFunction.from_dict(unit_phase.to_dict())
        t = np.linspace(0, np.pi, 17)
        np.testing.assert_array_equal(copy.alpha_p(t), unit_phase.alpha_p(t))
        np.testing.assert_array_equal(copy.alpha(t), unit_phase.alpha(t))

    def test_coefficient_count_flat_in_lambda(self):
        counts = {}
        for lam in (1e2, 1e4, 1e6):
            phase = build_phase(lambda t, lam=lam: -(lam**2) * np.asarray(t), (-10, 0))
            counts[lam] = phase.alpha_p.n_coeffs
        assert max(counts.values()) <= 2 * min(counts.values()), counts


class TestBasis:
    def test_unit_phase_at_origin(self, unit_phase):
        u, v, up, vp = eval_basis(unit_phase, 0.0)
        np.testing.assert_allclose([u, v, up, vp], [1, 0, 0, 1], atol=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(-10, 0), min_size=1, max_size=100))
    def test_identities(self, problem_phases, points):
        _, phase = problem_phases["airy"]
        t = np.array(points)
        u, v, up, vp = eval_basis(phase, t)
        np.testing.assert_allclose(u * vp - up * v, 1.0, atol=1e-11)
        np.testing.assert_allclose(u * u + v * v, 1 / phase.alpha_p(t), rtol=1e-12)

    def test_out_of_domain(self, unit_phase):
        with pytest.raises(OscPhaseError):
            eval_basis(unit_phase, 4.0)


class TestLiouvilleGreen:
    def test_constant(self):
        assert liouville_green_phase(const(4.0), (0, 1), 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_square(self):
        q = lambda t: np.asarray(t) ** 2
        assert liouville_green_phase(q, (1, 2), 2.0) == pytest.approx(1.5, rel=1e-12)

    def test_airy(self):
        q = lambda t: -np.asarray(t)
        assert liouville_green_phase(q, (-10, 0), 0.0) == pytest.approx(2 / 3 * 10**1.5, rel=1e-12)
        assert 2 / 3 * 10**1.5 == pytest.approx(21.0818511, abs=1e-7)

    def test_negative(self):
        with pytest.raises(InvalidCoefficient):
            liouville_green_phase(lambda t: np.asarray(t), (-1, 1), 1.0)


class TestRiccati:
    def test_unit(self, unit_phase):
        np.testing.assert_allclose(riccati_from_phase(unit_phase, np.linspace(0, np.pi, 11)), 1j, atol=1e-13)

    def test_constant_coefficient_exact(self):
        lam = 30.0
        phase = build_phase(const(lam**2), (0, 1))
        r = riccati_from_phase(phase, np.linspace(0, 1, 11))
        np.testing.assert_allclose(r * r + lam**2, 0.0, atol=1e-10 * lam**2)

    def test_airy_residual(self, problem_phases):
        problem, phase = problem_phases["airy"]
        t = np.linspace(-10, 0, 1000)
        ap, app, appp = phase.alpha_p(t), phase.alpha_pp(t), phase.alpha_ppp(t)
        r = riccati_from_phase(phase, t)
        dr = 1j * app - (appp * ap - app**2) / (2 * ap**2)
        assert np.max(np.abs(dr + r * r + problem.q(t))) <= 1e-8 * 1e6


class TestNormalize:
    def test_zero_damping(self):
        q = const(3.0)
        q_std, omega = normalize_general(const(0.0), const(0.5), q, dp=const(0.0))
        t = np.linspace(0, 1, 5)
        np.testing.assert_array_equal(q_std(t), q(t))
        np.testing.assert_allclose(omega(t), np.exp(-0.5))

    def test_constant_damping(self):
        c = 0.7
        q_std, _ = normalize_general(const(2 * c), lambda t: 2 * c * np.asarray(t), const(5.0), interval=(0, 1))
        np.testing.assert_allclose(q_std(np.linspace(0, 1, 5)), 5.0 - c * c, atol=1e-12)

    def test_requires_derivative_or_interval(self):
        with pytest.raises(InvalidArgument):
            normalize_general(const(1.0), const(1.0), const(1.0))

    def test_damped_oscillator(self):
        # y'' + 0.2 y' + 25 y = 0
        p, P, q = const(0.2), lambda t: 0.2 * np.asarray(t), const(25.0)
        q_std, omega = normalize_general(p, P, q, interval=(0, 4))
        phase = build_phase(q_std, (0, 4))
        t = np.linspace(0, 4, 1000)
        y1, y2 = general_basis(phase, omega, t)
        # closed form of the normalized basis
        w = np.sqrt(25 - 0.01)
        np.testing.assert_allclose(y1, np.exp(-0.1 * t) * np.cos(w * t) / np.sqrt(w), atol=1e-12)
        np.testing.assert_allclose(y2, np.exp(-0.1 * t) * np.sin(w * t) / np.sqrt(w), atol=1e-12)
        # substitute into the original equation, derivatives by differentiating a fit
        for y in (lambda s: general_basis(phase, omega, s)[0], lambda s: general_basis(phase, omega, s)[1]):
            fit = adaptive_fit(y, (0, 4))
            d1 = fit.derivative()
            d2 = d1.derivative()
            res = d2(t) + 0.2 * d1(t) + 25 * fit(t)
            assert np.max(np.abs(res)) <= 1e-9 * 25
