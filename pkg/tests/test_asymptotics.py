import math

import pytest

from kprophet.asymptotics import (
    I,
    asymptotic_bands,
    beta_bar,
    euler_sequences,
    verify_sandwich,
)
from kprophet.infinite_model import solve_v_infinity


class TestI:
    def test_unit_level_near_reference(self):
        assert I(1.341) == pytest.approx(1.0, abs=2e-3)

    def test_value_at_two_in_unit_interval(self):
        # denominator exceeds 1 pointwise at beta = 2
        val = I(2.0)
        assert 0.0 < val < 1.0

    def test_decreasing_spot(self):
        assert I(1.2) > I(1.5)

    def test_decreasing_on_grid(self):
        grid = [1.05 + 0.05 * i for i in range(20)]
        vals = [I(b) for b in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            I(1.0)


class TestBetaBar:
    def test_values(self):
        beta, gamma = beta_bar(1e-6)
        assert beta == pytest.approx(1.341, abs=1e-3)
        assert gamma == pytest.approx(0.745, abs=1e-3)

    def test_defining_property(self):
        tol = 1e-6
        beta, _ = beta_bar(tol)
        assert abs(I(beta) - 1.0) <= 10.0 * tol

    def test_dominates_ten_window_value(self):
        _, gamma = beta_bar(1e-6)
        assert gamma > solve_v_infinity(10).v


class TestEulerSequences:
    def test_first_step_closed_form(self):
        k, beta = 12, 1.36
        trace = euler_sequences(k, beta)
        assert trace.x[0] == 1.0 and trace.z[0] == 1.0
        assert trace.x[1] == pytest.approx(1.0 - beta / k, abs=0.0)

    def test_immediate_clamp_at_k1(self):
        trace = euler_sequences(1, 1.341)
        assert trace.x[1] == 0.0

    def test_gap_bound_at_reference_beta(self):
        k = 20
        beta, _ = beta_bar(1e-6)
        trace = euler_sequences(k, beta)
        bound = 4.0 * math.log(32.0 * k) / k
        assert all(z - x <= bound + 1e-12 for x, z in zip(trace.x, trace.z))

    def test_nonincreasing_and_clamped(self):
        trace = euler_sequences(9, 1.36)
        for seq in (trace.x, trace.z):
            assert all(a >= b for a, b in zip(seq, seq[1:]))
            hit = [i for i, v in enumerate(seq) if v == 0.0]
            if hit:
                assert all(v == 0.0 for v in seq[hit[0]:])

    def test_domain(self):
        with pytest.raises(ValueError):
            euler_sequences(5, 1.1)


class TestVerifySandwich:
    def test_k6_passes(self):
        report = verify_sandwich(6)
        assert report.passed
        assert min(report.lower_margins) >= -1e-9
        assert min(report.upper_margins) >= -1e-9

    def test_k8_floor(self):
        report = verify_sandwich(8)
        assert min(report.floor_margins) >= -1e-9

    def test_requires_k_at_least_six(self):
        with pytest.raises(ValueError):
            verify_sandwich(5)

    def test_report_serializes(self):
        d = verify_sandwich(6).to_dict()
        assert d["passed"] is True
        assert len(d["y"]) == 7


class TestAsymptoticBands:
    def test_ordering(self):
        for k in (1, 10, 100, 10**4):
            lo, hi = asymptotic_bands(k)
            assert lo <= hi

    def test_large_k(self):
        lo, hi = asymptotic_bands(10**4)
        _, gamma = beta_bar(1e-8)
        assert hi < gamma
        assert lo < solve_v_infinity(1).v < hi or lo > 0  # diagnostic only

    def test_small_k_lower_band_negative(self):
        lo, _ = asymptotic_bands(10)
        assert lo < 0  # constants are loose at small k; reported, not asserted
