import math

import numpy as np
import pytest

from kprophet.finite_model import (
    CertificateUndefined,
    EpsilonSchedule,
    StageInfeasible,
    WindowPlan,
    dual_certificate,
    epsilon_schedule,
    gamma_n_1,
    solve_v_finite,
    two_threshold_exact,
)
from kprophet.infinite_model import solve_v_infinity
from kprophet.numerics import integrate

PI2_6 = math.pi**2 / 6.0


class TestWindowPlan:
    def test_default_shapes(self):
        assert WindowPlan.default(100, 4).taus == (25, 25, 25, 25)
        assert WindowPlan.default(1000, 3).taus == (334, 334, 332)
        assert WindowPlan.default(50, 50).taus == (1,) * 50

    def test_validation(self):
        with pytest.raises(ValueError):
            WindowPlan(n=10, k=2, taus=(5, 6))
        with pytest.raises(ValueError):
            WindowPlan(n=10, k=2, taus=(10, 0))
        with pytest.raises(ValueError):
            WindowPlan(n=2, k=3, taus=(1, 1, 1))

    def test_equal_window_flag(self):
        assert WindowPlan(n=10, k=3, taus=(4, 4, 2)).is_equal_window
        assert not WindowPlan(n=10, k=3, taus=(2, 4, 4)).is_equal_window


class TestGamma:
    def test_small_values(self):
        assert gamma_n_1(1) == 1.0
        assert gamma_n_1(2) == 0.75

    def test_limit(self):
        assert abs(gamma_n_1(10**6) - (1.0 - 1.0 / math.e)) <= 1e-6
        assert gamma_n_1(10**6) > 1.0 - 1.0 / math.e

    def test_strictly_decreasing_to_limit(self):
        vals = [gamma_n_1(n) for n in (1, 2, 5, 20, 100)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def single_window_value_oracle(n: int) -> float:
    """Independent quadrature for the k = 1 value: the first-stage equation
    at eps_1 = 1 gives v = 1 / (n(n-1) int_0^1 q(1-q)^(n-2)/(1-(1-q)^n) dq)."""

    def f(q):
        q = np.asarray(q, dtype=float)
        num = q * np.exp((n - 2) * np.log1p(-np.minimum(q, 1.0 - 1e-17)))
        den = -np.expm1(n * np.log1p(-np.minimum(q, 1.0 - 1e-17)))
        return np.where(q < 1e-14, 1.0 / n, num / den)

    return 1.0 / (n * (n - 1) * integrate(f, 0.0, 1.0))


def unit_window_value_oracle(n: int, tol: float = 1e-12) -> float:
    """Closed-form recursion for the all-unit-window plan (tau_t = 1):
    every stage integral has an antiderivative, no quadrature involved."""

    def int_q_pow(eps: float) -> float:
        pw = math.exp((n - 1) * math.log1p(-eps)) if eps < 1.0 else 0.0
        return (1.0 - pw * (1.0 + (n - 1) * eps)) / (n * (n - 1))

    def eps_last(v: float) -> float:
        e = 0.0
        for _ in range(n):
            budget = 1.0 / (v * n * (n - 1)) - int_q_pow(e)
            if budget < 0.0:
                return -1.0
            s = math.exp((n - 1) * math.log1p(-e)) - (n - 1) * budget
            if s < 0.0:
                return 2.0
            e = 1.0 - s ** (1.0 / (n - 1))
        return e

    lo, hi = 0.55, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        e = eps_last(mid)
        if e >= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


class TestEpsilonSchedule:
    def test_single_window_boundary_at_oracle_value(self):
        # eps_1(v) crosses 1 exactly at the oracle value; the map is so
        # steep at the top ((1-eps)^(n-1) compresses many decades) that in
        # floating point only the two sides of the crossing are observable
        n = 100
        v_star = single_window_value_oracle(n)
        below = epsilon_schedule(WindowPlan.default(n, 1), v_star * (1.0 - 1e-6))
        assert isinstance(below, StageInfeasible)
        assert below.kind == "breakpoint-above-one"
        above = epsilon_schedule(WindowPlan.default(n, 1), v_star * (1.0 + 1e-4))
        assert isinstance(above, EpsilonSchedule)
        assert above.eps[-1] < 1.0

    def test_never_reaches_one_at_v_equal_one(self):
        r = epsilon_schedule(WindowPlan.default(100, 5), 1.0)
        assert isinstance(r, EpsilonSchedule)
        assert r.eps[-1] < 1.0

    def test_first_stage_monotone_in_v_below_optimum(self):
        # below the optimum only a prefix exists; its head must still fall in v
        plan = WindowPlan.default(100, 5)
        lo = epsilon_schedule(plan, 0.5)
        hi = epsilon_schedule(plan, 0.6)
        assert isinstance(lo, StageInfeasible) and isinstance(hi, StageInfeasible)
        assert lo.eps_prefix[1] > hi.eps_prefix[1]

    def test_monotone_in_v(self):
        plan = WindowPlan.default(100, 5)
        lo = epsilon_schedule(plan, 0.8)
        hi = epsilon_schedule(plan, 0.9)
        assert isinstance(lo, EpsilonSchedule) and isinstance(hi, EpsilonSchedule)
        # strict decrease holds at every stage, not just the first
        for t in range(1, 6):
            assert lo.eps[t] > hi.eps[t]

    def test_small_v_overflows_bracket(self):
        r = epsilon_schedule(WindowPlan.default(100, 2), 0.2)
        assert isinstance(r, StageInfeasible)
        assert r.kind == "breakpoint-above-one"

    def test_rejects_unequal_plans(self):
        with pytest.raises(ValueError):
            epsilon_schedule(WindowPlan(n=10, k=2, taus=(3, 7)), 0.7)


class TestSolveVFinite:
    def test_large_n_single_window_near_limit(self):
        s = solve_v_finite(WindowPlan.default(10**4, 1))
        assert s.v == pytest.approx(6.0 / math.pi**2, abs=1e-2)

    def test_matches_independent_quadrature_oracle(self):
        n = 200
        assert solve_v_finite(WindowPlan.default(n, 1)).v == pytest.approx(
            single_window_value_oracle(n), abs=1e-8
        )

    def test_three_windows_near_limit(self):
        s = solve_v_finite(WindowPlan.default(10**4, 3))
        assert s.v == pytest.approx(0.7233, abs=2e-2)

    def test_unit_windows_match_closed_form_recursion(self):
        # tau_t = 1 for all t; the independent oracle uses no quadrature.
        # The value exceeds the fully-dynamic limit constant, as finite
        # horizons always do.
        n = 50
        v = solve_v_finite(WindowPlan.default(n, n)).v
        assert v == pytest.approx(unit_window_value_oracle(n), abs=1e-7)
        assert 0.70 <= v <= 0.76
        assert v > 0.7453

    def test_relaxation_below_exact_single_threshold(self):
        for n in (10, 100, 1000):
            assert gamma_n_1(n) > solve_v_finite(WindowPlan.default(n, 1)).v


class TestDualCertificate:
    def test_single_window_collapse(self):
        s = solve_v_finite(WindowPlan.default(50, 1))
        cert = dual_certificate(s)
        assert cert.a[0] == pytest.approx(s.v, abs=0.0)
        assert cert.d[0] == pytest.approx(s.v, abs=1e-9)

    def test_four_windows(self):
        s = solve_v_finite(WindowPlan.default(100, 4))
        cert = dual_certificate(s)
        assert cert.d[0] == pytest.approx(cert.a[0], abs=1e-6)
        assert all(a >= b - 1e-12 for a, b in zip(cert.a, cert.a[1:]))
        assert all(a > 0 for a in cert.a[:-1])
        assert cert.a[-1] == 0.0
        assert max(cert.continuity_gaps) <= 1e-7
        for dt, at in zip(cert.d, cert.a):
            assert dt == pytest.approx(at, abs=1e-6)

    def test_f_is_nondecreasing(self):
        s = solve_v_finite(WindowPlan.default(60, 3))
        cert = dual_certificate(s)
        qs = np.linspace(0.0, 1.0, 301)
        vals = [cert.F(float(q)) for q in qs]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_requires_optimal_schedule(self):
        plan = WindowPlan.default(50, 2)
        sub = epsilon_schedule(plan, 0.9)
        assert isinstance(sub, EpsilonSchedule)
        with pytest.raises(CertificateUndefined):
            dual_certificate(sub)


class TestTwoThresholdExact:
    def test_primal_constants(self):
        sol = two_threshold_exact()
        assert sol.u2 == pytest.approx(1.316097, abs=1e-4)
        assert sol.theta == pytest.approx(0.603285, abs=1e-4)
        assert sol.a1 == pytest.approx(0.517708, abs=1e-4)
        assert sol.a2 == pytest.approx(2.316097, abs=1e-4)
        assert sol.v_bar == pytest.approx(0.70804, abs=1e-4)

    def test_dual_constants(self):
        sol = two_threshold_exact()
        assert sol.dual_a == pytest.approx(0.516213, abs=1e-4)
        assert sol.dual_b == pytest.approx(0.567355, abs=1e-4)
        assert sol.dual_c == pytest.approx(0.255744, abs=1e-4)
        assert abs(sol.d1 - sol.v_bar) <= 1e-5

    def test_gap_identity(self):
        sol = two_threshold_exact()
        expected = sol.u2 + sol.u2 * math.exp(-sol.u2) / (-math.expm1(-sol.u2))
        assert sol.a2 - sol.a1 == pytest.approx(expected, abs=1e-9)

    def test_between_one_and_three_window_limits(self):
        sol = two_threshold_exact()
        assert solve_v_infinity(2).v < sol.v_bar < solve_v_infinity(3).v
