import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kprophet.distributions import (
    NEVER_ACCEPT,
    ParameterError,
    SmoothedDiscrete,
    bounded_pareto,
    builtin,
    exponential,
    prophet_value_exact,
    prophet_value_mc,
    scaled,
    smooth,
    threshold_from_quantile,
    uniform01,
)
from kprophet.numerics import seeded_rng


class TestBuiltins:
    def test_uniform_quantile(self):
        assert builtin("uniform01").quantile(0.25) == pytest.approx(0.25)

    def test_exponential_quantile(self):
        d = builtin("exponential", rate=1.0)
        assert d.quantile(1.0 - math.exp(-1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_pareto_round_trip(self):
        d = builtin("bounded-pareto", shape=2.0, cap=100.0)
        assert d.cdf(d.quantile(0.9)) == pytest.approx(0.9, abs=1e-9)

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            builtin("exponential", rate=0.0)
        with pytest.raises(ParameterError):
            builtin("bounded-pareto", shape=-1.0, cap=10.0)
        with pytest.raises(ParameterError):
            builtin("bounded-pareto", shape=1.0, cap=0.5)
        with pytest.raises(ParameterError):
            builtin("cauchy")
        with pytest.raises(ParameterError):
            builtin("exponential", scale=2.0)

    @settings(max_examples=30, deadline=None)
    @given(u=st.floats(1e-6, 1.0 - 1e-6))
    def test_round_trip_property(self, u):
        for d in (uniform01(), exponential(0.7), bounded_pareto(2.5, 50.0)):
            assert float(d.cdf(d.quantile(u))) == pytest.approx(u, abs=1e-9)

    def test_thresholds_fall_as_quantile_rises(self):
        qs = np.linspace(0.01, 0.99, 25)
        for d in (uniform01(), exponential(1.0), bounded_pareto(2.0, 100.0)):
            xs = [threshold_from_quantile(d, float(q)) for q in qs]
            assert all(a >= b for a, b in zip(xs, xs[1:]))

    def test_sampler_matches_cdf_ks(self):
        # one-sample Kolmogorov-Smirnov at alpha ~ 1e-3
        n = 20000
        crit = 1.95 / math.sqrt(n)
        for i, d in enumerate((uniform01(), exponential(1.0), bounded_pareto(2.0, 100.0))):
            draws = np.sort(d.sample(seeded_rng(100 + i), n))
            grid = d.cdf(draws)
            upper = np.max(np.arange(1, n + 1) / n - grid)
            lower = np.max(grid - np.arange(0, n) / n)
            assert max(upper, lower) < crit


class TestSmoothing:
    def test_single_atom_is_continuous(self):
        d = smooth(SmoothedDiscrete(atoms=[(1.0, 1.0)], noise_width=1e-6))
        lo, hi = d.support
        assert hi - lo == pytest.approx(1e-6, rel=1e-6)
        xs = np.linspace(lo, hi, 50)
        cdf = d.cdf(xs)
        assert np.all(np.diff(cdf) > 0)
        assert d.cdf(lo) == pytest.approx(0.0, abs=1e-12)
        assert d.cdf(hi) == pytest.approx(1.0, abs=1e-12)

    def test_two_atoms_quantile(self):
        d = smooth(SmoothedDiscrete(atoms=[(0.0, 0.5), (1.0, 0.5)], noise_width=1e-3))
        q = float(d.quantile(0.75))
        assert 1.0 - 1e-3 < q < 1.0 + 1e-3

    def test_prophet_shift_bounded_by_width(self):
        # smoothing a point mass at 1 moves E[max of 5] by less than the width
        d = smooth(SmoothedDiscrete(atoms=[(1.0, 1.0)], noise_width=1e-6))
        exact = prophet_value_exact(d, 5)
        assert abs(exact - 1.0) <= 1e-6
        mc, se = prophet_value_mc(d, 5, trials=20000, seed=5)
        assert abs(mc - exact) <= 3.0 * se + 1e-9

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            SmoothedDiscrete(atoms=[(1.0, 1.0)], noise_width=0.0)
        with pytest.raises(ParameterError):
            SmoothedDiscrete(atoms=[(1.0, 0.4)], noise_width=1e-3)
        with pytest.raises(ParameterError):
            SmoothedDiscrete(atoms=[], noise_width=1e-3)


class TestThresholds:
    def test_uniform_half(self):
        assert threshold_from_quantile(uniform01(), 0.5) == pytest.approx(0.5)

    def test_exponential_unit(self):
        assert threshold_from_quantile(exponential(1.0), math.exp(-1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_one_percent(self):
        assert threshold_from_quantile(uniform01(), 0.01) == pytest.approx(0.99)

    def test_never_accept_sentinel(self):
        assert threshold_from_quantile(uniform01(), 0.0) == NEVER_ACCEPT
        assert math.isinf(NEVER_ACCEPT)

    def test_always_accept_is_support_floor(self):
        assert threshold_from_quantile(bounded_pareto(2.0, 100.0), 1.0) == 1.0

    def test_domain(self):
        with pytest.raises(ParameterError):
            threshold_from_quantile(uniform01(), 1.5)


class TestProphetValue:
    def test_uniform_single(self):
        assert prophet_value_exact(uniform01(), 1) == pytest.approx(0.5, abs=1e-9)

    def test_uniform_pair(self):
        assert prophet_value_exact(uniform01(), 2) == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_exponential_harmonic(self):
        # E[max of n exponentials] is the n-th harmonic number
        h3 = 1.0 + 0.5 + 1.0 / 3.0
        assert prophet_value_exact(exponential(1.0), 3) == pytest.approx(h3, abs=1e-8)
        mc, se = prophet_value_mc(exponential(1.0), 3, trials=100000, seed=11)
        assert abs(mc - h3) <= 3.0 * se

    def test_scale_covariance(self):
        base = exponential(1.0)
        assert prophet_value_exact(scaled(base, 2.0), 4) == pytest.approx(
            2.0 * prophet_value_exact(base, 4), rel=1e-10
        )
        # the quantile argument keeps its meaning; only the value scales
        for q in (0.1, 0.5, 0.9):
            assert threshold_from_quantile(scaled(base, 2.0), q) == pytest.approx(
                2.0 * threshold_from_quantile(base, q), rel=1e-12
            )

    def test_monte_carlo_agreement(self):
        d = bounded_pareto(2.0, 100.0)
        exact = prophet_value_exact(d, 10)
        mc, se = prophet_value_mc(d, 10, trials=100000, seed=3)
        assert abs(mc - exact) <= 3.0 * se
