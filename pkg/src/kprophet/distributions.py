"""Continuous distributions on the nonnegative reals.

A :class:`Distribution` bundles the CDF, the quantile function (inverse
CDF) and a sampler. Threshold policies only ever touch distributions
through quantiles: a window rule picks an acceptance probability
``q = P(X >= x)`` and the threshold is recovered as ``x = quantile(1-q)``.

Discrete inputs are supported through :func:`smooth`, which convolves
each atom with a narrow uniform kernel so the continuity assumption of
the policy analysis holds (at a value loss bounded by the kernel width).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numerics import DEFAULT_SPEC, QuadratureSpec, integrate, substream

__all__ = [
    "Distribution",
    "SmoothedDiscrete",
    "ParameterError",
    "builtin",
    "uniform01",
    "exponential",
    "bounded_pareto",
    "scaled",
    "smooth",
    "threshold_from_quantile",
    "prophet_value_exact",
    "prophet_value_mc",
    "NEVER_ACCEPT",
]

NEVER_ACCEPT = math.inf  # threshold sentinel for q = 0


class ParameterError(ValueError):
    """A distribution parameter is outside its valid range."""


@dataclass(frozen=True)
class Distribution:
    """Continuous nonnegative distribution described by cdf/quantile/sampler.

    ``cdf`` and ``quantile`` must be numpy-elementwise callables that are
    exact inverses on the support: ``cdf(quantile(u)) == u`` up to 1e-9.
    ``support`` is the closed interval carrying all mass.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    descriptor: dict = field(default_factory=dict)
    support: tuple[float, float] = (0.0, math.inf)

    def sample(self, rng: np.random.Generator, size: int | tuple = ()) -> np.ndarray:
        """Inverse-CDF sampling from the given random stream."""
        return self.quantile(rng.random(size))


def uniform01() -> Distribution:
    return Distribution(
        cdf=lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0),
        quantile=lambda u: np.asarray(u, dtype=float),
        descriptor={"name": "uniform01", "params": {}},
        support=(0.0, 1.0),
    )


def exponential(rate: float) -> Distribution:
    if not rate > 0:
        raise ParameterError(f"exponential rate must be positive, got {rate!r}")
    return Distribution(
        cdf=lambda x: -np.expm1(-rate * np.maximum(np.asarray(x, dtype=float), 0.0)),
        quantile=lambda u: -np.log1p(-np.asarray(u, dtype=float)) / rate,
        descriptor={"name": "exponential", "params": {"rate": rate}},
        support=(0.0, math.inf),
    )


def bounded_pareto(shape: float, cap: float) -> Distribution:
    """Pareto with unit scale truncated at ``cap``.

    The truncation keeps E[max] finite for any shape, so heavy-tailed
    benchmarks stay integrable; the cap is recorded in the descriptor.
    """
    if not shape > 0:
        raise ParameterError(f"bounded-pareto shape must be positive, got {shape!r}")
    if not cap > 1:
        raise ParameterError(f"bounded-pareto cap must exceed the unit scale, got {cap!r}")
    tail = cap ** (-shape)  # P(X > cap) for the untruncated law

    def cdf(x):
        x = np.asarray(x, dtype=float)
        inside = (1.0 - np.maximum(x, 1.0) ** (-shape)) / (1.0 - tail)
        return np.clip(np.where(x < 1.0, 0.0, inside), 0.0, 1.0)

    def quantile(u):
        u = np.asarray(u, dtype=float)
        return (1.0 - u * (1.0 - tail)) ** (-1.0 / shape)

    return Distribution(
        cdf=cdf,
        quantile=quantile,
        descriptor={"name": "bounded-pareto", "params": {"shape": shape, "cap": cap}},
        support=(1.0, cap),
    )


_BUILTINS = {
    "uniform01": uniform01,
    "exponential": exponential,
    "bounded-pareto": bounded_pareto,
}


def builtin(name: str, **params: float) -> Distribution:
    """Construct a named distribution: uniform01, exponential(rate), bounded-pareto(shape, cap)."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ParameterError(f"unknown distribution {name!r}; choose from {sorted(_BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name!r}: {exc}") from None


def scaled(base: Distribution, factor: float) -> Distribution:
    """The distribution of ``factor * X``. Quantile-based policies are covariant under it."""
    if not factor > 0:
        raise ParameterError("scale factor must be positive")
    return Distribution(
        cdf=lambda x: base.cdf(np.asarray(x, dtype=float) / factor),
        quantile=lambda u: factor * base.quantile(u),
        descriptor={"name": "scaled", "params": {"factor": factor, "base": base.descriptor}},
        support=(base.support[0] * factor, base.support[1] * factor),
    )


@dataclass(frozen=True)
class SmoothedDiscrete:
    """Finite atom list plus the uniform noise width used to smooth it."""

    atoms: Sequence[tuple[float, float]]
    noise_width: float

    def __post_init__(self) -> None:
        if not self.noise_width > 0:
            raise ParameterError("noise width must be positive")
        if not self.atoms:
            raise ParameterError("need at least one atom")
        probs = [p for _, p in self.atoms]
        if any(p <= 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ParameterError("atom probabilities must be positive and sum to 1")
        if any(v < 0 for v, _ in self.atoms):
            raise ParameterError("atom values must be nonnegative")


def smooth(d: SmoothedDiscrete) -> Distribution:
    """Continuous version of a discrete law: each atom becomes a width-eps uniform.

    The kernel for an atom at ``v`` is uniform on
    ``[max(0, v - eps/2), max(0, v - eps/2) + eps]``, so the support stays
    nonnegative and no sample moves further than ``eps`` from its atom;
    in particular E[max of n draws] shifts by at most ``eps``.
    """
    eps = d.noise_width
    lows = np.array([max(0.0, v - 0.5 * eps) for v, _ in d.atoms])
    probs = np.array([p for _, p in d.atoms])
    order = np.argsort(lows, kind="stable")
    lows, probs = lows[order], probs[order]
    highs = lows + eps

    # CDF is piecewise linear with knots at every interval endpoint.
    knots = np.unique(np.concatenate([lows, highs]))
    dens_at = np.zeros(len(knots) - 1)
    for lo, p in zip(lows, probs):
        covered = (knots[:-1] >= lo - 1e-300) & (knots[1:] <= lo + eps + 1e-300)
        dens_at[covered] += p / eps
    seg_mass = dens_at * np.diff(knots)
    cdf_knots = np.concatenate([[0.0], np.cumsum(seg_mass)])
    cdf_knots /= cdf_knots[-1]

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), knots, cdf_knots)

    def quantile(u):
        return np.interp(np.asarray(u, dtype=float), cdf_knots, knots)

    return Distribution(
        cdf=cdf,
        quantile=quantile,
        descriptor={
            "name": "smoothed-discrete",
            "params": {"atoms": [list(a) for a in d.atoms], "noise_width": eps},
        },
        support=(float(knots[0]), float(knots[-1])),
    )


def threshold_from_quantile(d: Distribution, q: float) -> float:
    """Largest x with P(X >= x) = q, i.e. the price at acceptance probability q.

    ``q = 0`` has no finite such x; it returns the ``NEVER_ACCEPT``
    sentinel (an infinite threshold) rather than poisoning arithmetic
    downstream. ``q = 1`` returns the lower end of the support, which
    every draw meets.
    """
    if q < 0.0 or q > 1.0:
        raise ParameterError(f"quantile must lie in [0, 1], got {q!r}")
    if q == 0.0:
        return NEVER_ACCEPT
    if q == 1.0:
        return d.support[0]
    return float(d.quantile(1.0 - q))


def prophet_value_exact(d: Distribution, n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """E[max of n i.i.d. draws] by quadrature of the order-statistic integral.

    Computes ``int_0^1 quantile(1-u) * n * (1-u)^(n-1) du``; quadrature
    failures (budget exhaustion on extreme quantile tails) propagate as
    QuadratureError so callers can fall back to Monte Carlo.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")

    # substituting s = 1 - u puts the integral in the form
    # int_0^1 quantile(s) * n * s^(n-1) ds, with the weight at the upper end
    def integrand(s):
        s = np.asarray(s, dtype=float)
        return d.quantile(s) * n * s ** (n - 1.0)

    return integrate(integrand, 0.0, 1.0, spec)


def prophet_value_mc(d: Distribution, n: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo E[max of n draws]: returns (estimate, standard error)."""
    rng = substream(seed, 0)
    total = 0.0
    total_sq = 0.0
    done = 0
    batch = max(1, min(trials, 1 << 22) // max(n, 1) or 1)
    while done < trials:
        b = min(batch, trials - done)
        m = d.quantile(rng.random((b, n))).max(axis=1)
        total += float(m.sum())
        total_sq += float((m * m).sum())
        done += b
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return mean, math.sqrt(var / trials)
