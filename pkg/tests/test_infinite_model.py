import math

import numpy as np
import pytest

from kprophet import infinite_model as im
from kprophet.numerics import integrate

PI2_6 = math.pi**2 / 6.0

# Four-decimal reference values for the limit-model optimum (regression targets).
REFERENCE_V = {3: 0.7233, 4: 0.7321, 5: 0.7364, 6: 0.7389, 7: 0.7405,
               8: 0.7416, 9: 0.7423, 10: 0.7428}


class TestH:
    def test_zero(self):
        for k in (1, 2, 7):
            assert im.H(k, 0.0) == 0.0

    def test_k1_full_mass(self):
        assert im.H(1, 1.0) == pytest.approx(PI2_6, abs=1e-9)

    def test_k2_full_mass_via_independent_substitution(self):
        # with x = sqrt(y) the k = 2 integrand becomes 4 x (-log x)/(1 - x);
        # integrate that directly as the oracle
        def g(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                r = 4.0 * x * (-np.log(x)) / (1.0 - x)
            return np.where(x >= 1.0, 4.0, r)

        oracle = integrate(g, 0.0, 1.0)
        assert oracle == pytest.approx(4.0 * (PI2_6 - 1.0), abs=1e-9)
        assert im.H(2, 1.0) == pytest.approx(oracle, abs=1e-9)
        assert im.H(2, 1.0) == pytest.approx(2.5797362673929056, abs=1e-8)

    def test_strictly_increasing(self):
        xs = np.linspace(0.0, 1.0, 17)
        vals = [im.H(3, float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            im.H(0, 0.5)
        with pytest.raises(ValueError):
            im.H(2, 1.5)


class TestHPhi:
    def test_half_matches_k2(self):
        assert im.H_phi(0.5, 1.0) == pytest.approx(im.H(2, 1.0), abs=1e-10)

    def test_zero(self):
        assert im.H_phi(0.9, 0.0) == 0.0

    def test_interior_positive_below_total(self):
        val = im.H_phi(0.610, 0.2620)
        assert 0.0 < val < im.H_phi(0.610, 1.0)


class TestBreakpointsGivenV:
    def test_k1_at_optimum(self):
        bp = im.breakpoints_given_v(1, 6.0 / math.pi**2)
        assert isinstance(bp, im.InfiniteBreakpoints)
        assert bp.y == (1.0, 0.0)
        assert bp.residuals[-1] == pytest.approx(0.0, abs=1e-6)

    def test_k2_far_above_optimum_is_infeasible(self):
        bp = im.breakpoints_given_v(2, 0.9)
        if isinstance(bp, im.InfiniteBreakpoints):
            assert bp.residuals[-1] < 0
        else:
            assert bp.stage >= 1

    def test_k3_below_optimum_is_feasible(self):
        bp = im.breakpoints_given_v(3, 0.70)
        assert isinstance(bp, im.InfiniteBreakpoints)
        assert bp.residuals[-1] >= 0
        assert all(a >= b for a, b in zip(bp.y, bp.y[1:]))

    def test_rejects_bad_v(self):
        with pytest.raises(ValueError):
            im.breakpoints_given_v(3, 0.0)


class TestSolveVInfinity:
    def test_k1_is_basel_constant(self):
        bp = im.solve_v_infinity(1)
        assert bp.v == pytest.approx(6.0 / math.pi**2, abs=1e-6)

    @pytest.mark.parametrize("k", [5, 10])
    def test_reference_values(self, k):
        bp = im.solve_v_infinity(k)
        assert bp.v == pytest.approx(REFERENCE_V[k], abs=5e-4)

    def test_monotone_in_k_and_bounded(self):
        vals = [im.solve_v_infinity(k).v for k in range(1, 8)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= 0.7452

    def test_breakpoint_floor(self):
        # interior breakpoints stay above the l/(32k) floor for k >= 4
        for k in (4, 8):
            bp = im.solve_v_infinity(k)
            for ell in range(1, k + 1):
                assert bp.y[k - ell] >= ell / (32.0 * k) - 1e-9

    def test_feasibility_dichotomy(self):
        delta = 1e-8
        bp = im.solve_v_infinity(3, delta)
        below = im.breakpoints_given_v(3, bp.v - 10 * delta)
        above = im.breakpoints_given_v(3, bp.v + 10 * delta)
        assert isinstance(below, im.InfiniteBreakpoints) and below.residuals[-1] >= 0
        assert isinstance(above, im.InfeasibleAtStage) or above.residuals[-1] < 0

    def test_mass_balance_identity(self):
        # fresh adaptive quadrature of the density over each window must
        # equal v * (H(y_{t-1}) - H(y_t)); this is the independent path
        k = 4
        bp = im.solve_v_infinity(k)

        def ratio(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                r = -np.log(y) / (-np.expm1(np.log(y) / k))
            return np.where(y >= 1.0, float(k), r)

        for t in range(1, k + 1):
            y_hi, y_lo = bp.y[t - 1], bp.y[t]
            direct = bp.v * integrate(ratio, y_lo, y_hi)
            via_h = bp.v * (im.H(k, y_hi) - im.H(k, y_lo))
            assert direct == pytest.approx(via_h, abs=1e-8)

    def test_k_cap(self):
        with pytest.raises(ValueError):
            im.solve_v_infinity(im.MAX_K + 1)

    def test_value_at_cap_stays_below_dynamic_constant(self):
        # the ceiling must clear every finite-k value: at the cap the gap
        # to the fully-dynamic constant 0.7454403 is under 1e-4 but positive
        bp = im.solve_v_infinity(im.MAX_K)
        assert 0.7453 < bp.v < 0.745440332913
        assert bp.v > im.solve_v_infinity(32).v


class TestTwoWindowTheta:
    def test_peak_split(self):
        r = im.v_infinity_2_theta(0.610)
        assert r.v == pytest.approx(0.7048, abs=5e-4)
        assert r.y1 == pytest.approx(0.2620, abs=5e-3)

    def test_even_split(self):
        r = im.v_infinity_2_theta(0.5)
        assert r.v == pytest.approx(0.701, abs=1e-3)
        # and it agrees with the equal-window k = 2 solver
        assert r.v == pytest.approx(im.solve_v_infinity(2).v, abs=1e-6)

    def test_near_one_split(self):
        # the value falls back toward the one-window optimum as theta -> 1,
        # but slowly: at 0.99 the remaining gap is still about 1.1e-2
        # (30-digit recomputation: v = 0.6190696698...)
        r = im.v_infinity_2_theta(0.99)
        assert r.v == pytest.approx(0.6190696698, abs=2e-6)
        assert r.v > 6.0 / math.pi**2

    def test_domain(self):
        with pytest.raises(ValueError):
            im.v_infinity_2_theta(0.4)
        with pytest.raises(ValueError):
            im.v_infinity_2_theta(1.0)


class TestOptimizeTheta:
    def test_trivial_grid_is_even_split(self):
        theta, best = im.optimize_theta(2)
        assert theta == 0.5
        assert best.v == pytest.approx(0.701, abs=1e-3)

    def test_coarse_grid(self):
        theta, best = im.optimize_theta(10)
        assert abs(theta - 0.610) <= 0.1
        assert best.v == pytest.approx(0.7048, abs=2e-3)

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            im.optimize_theta(1)
