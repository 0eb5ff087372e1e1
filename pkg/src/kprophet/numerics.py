"""Shared numerical primitives.

Three building blocks used by every solver in this package:

* adaptive Gauss-Kronrod quadrature that tolerates integrable endpoint
  singularities (the rule never evaluates the endpoints themselves),
* bracketed bisection for monotone functions, and
* a seedable counter-based random source (Philox) with indexed
  sub-streams, so Monte Carlo runs are reproducible under any batching.

Integrands passed to :func:`integrate` must accept numpy arrays and
evaluate elementwise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "RootBracket",
    "BracketError",
    "integrate",
    "integrate_with_substitution",
    "find_root_monotone",
    "seeded_rng",
    "substream",
    "CumulativeIntegral",
]


class QuadratureError(RuntimeError):
    """Subdivision budget exhausted before the tolerance was met.

    Carries the best estimate and the residual error bound so callers can
    decide whether to degrade gracefully.
    """

    def __init__(self, message: str, estimate: float, residual: float):
        super().__init__(f"{message} (estimate={estimate!r}, residual={residual!r})")
        self.estimate = estimate
        self.residual = residual


class BracketError(ValueError):
    """The supplied bracket does not enclose a sign change."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Error control for adaptive quadrature.

    The target is ``max(abs_tol, rel_tol * |estimate|)`` on the summed
    panel error estimates.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 10**6

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()

# 15-point Kronrod extension of 7-point Gauss-Legendre, nodes in (-1, 1).
# Endpoints are never sampled, which is what makes -log y style integrands
# workable without special casing.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)  # Gauss nodes sit at the odd Kronrod slots


def _panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel: returns (estimate, error_estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _XK), dtype=float)
    if fx.shape != _XK.shape:
        raise TypeError("integrand must evaluate elementwise on numpy arrays")
    if not np.all(np.isfinite(fx)):
        raise ValueError(f"integrand is not finite inside [{a!r}, {b!r}]")
    ik = half * float(fx @ _WK)
    ig = half * float(fx[_GAUSS_IDX] @ _WG)
    diff = abs(ik - ig)
    # QUADPACK-style sharpening: the Kronrod estimate is far more accurate
    # than |K - G| suggests on smooth panels.
    err = min(diff, (200.0 * diff) ** 1.5) if diff > 0 else 0.0
    return ik, max(err, abs(ik) * 1e-16)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Adaptive quadrature of ``f`` over ``[a, b]``.

    Globally adaptive: the panel with the largest error estimate is split
    first. Raises :class:`QuadratureError` when ``spec.max_subdivisions``
    panels are insufficient.
    """
    if a > b:
        raise ValueError("integrate requires a <= b")
    if a == b:
        return 0.0
    est, err = _panel(f, a, b)
    heap = [(-err, a, b, est, err)]
    total, total_err = est, err
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if len(heap) >= spec.max_subdivisions:
            raise QuadratureError("quadrature budget exhausted", total, total_err)
        _, pa, pb, pest, perr = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        if pm <= pa or pm >= pb:
            # interval at floating point resolution, keep its estimate
            total_err -= perr
            total += 0.0
            heapq.heappush(heap, (0.0, pa, pb, pest, 0.0))
            continue
        le, lerr = _panel(f, pa, pm)
        re, rerr = _panel(f, pm, pb)
        total += (le + re) - pest
        total_err += (lerr + rerr) - perr
        heapq.heappush(heap, (-lerr, pa, pm, le, lerr))
        heapq.heappush(heap, (-rerr, pm, pb, re, rerr))
    return total


def integrate_with_substitution(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    power: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Integrate ``f`` over ``[a, b]`` after the change of variable ``y = x**power``.

    Useful when ``f`` has a root-type singularity that the substitution
    flattens: the returned value is
    ``int_{a^{1/power}}^{b^{1/power}} f(x**power) * power * x**(power-1) dx``.
    """
    if power <= 0:
        raise ValueError("power must be positive")
    if a < 0:
        raise ValueError("substitution requires a nonnegative interval")
    lo, hi = a ** (1.0 / power), b ** (1.0 / power)

    def g(x: np.ndarray) -> np.ndarray:
        return f(x**power) * power * x ** (power - 1.0)

    return integrate(g, lo, hi, spec)


@dataclass(frozen=True)
class RootBracket:
    """An interval [lo, hi] with a sign change of the target function."""

    lo: float
    hi: float
    f_lo_sign: int
    f_hi_sign: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")
        if self.f_lo_sign * self.f_hi_sign >= 0:
            raise BracketError("bracket endpoints must have opposite signs")

    @classmethod
    def from_function(cls, g: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        glo, ghi = g(lo), g(hi)
        slo = int(np.sign(glo))
        shi = int(np.sign(ghi))
        if slo == 0:
            return cls(lo, math.nextafter(lo, hi), -shi if shi != 0 else -1, shi if shi != 0 else 1)
        if shi == 0:
            return cls(math.nextafter(hi, lo), hi, slo, -slo)
        return cls(lo, hi, slo, shi)


def find_root_monotone(
    g: Callable[[float], float],
    bracket: RootBracket,
    tol: float,
) -> float:
    """Bisection on a monotone ``g``: localizes the root to width <= tol.

    Deterministic for fixed inputs. Guaranteed to converge whenever the
    bracket is valid, which is why the solvers in this package prefer it
    over derivative-based iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = bracket.lo, bracket.hi
    slo = bracket.f_lo_sign
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # hit floating point resolution
        gm = g(mid)
        if gm == 0.0:
            return mid
        if int(np.sign(gm)) == slo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic uniform stream for ``seed`` (Philox 4x64 counter RNG).

    Identical seeds give bit-identical streams on every platform numpy
    supports. Equivalent to ``substream(seed, 0)``.
    """
    return substream(seed, 0)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent sub-stream ``index`` of the stream keyed by ``seed``.

    The (seed, index) pair forms the 128-bit Philox key, so distinct
    indices give statistically independent, individually reproducible
    streams; parallel batches can each own one.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index & 0xFFFFFFFFFFFFFFFF)])
    return np.random.Generator(np.random.Philox(key=key))


class CumulativeIntegral:
    """Fast repeated evaluation of ``x -> int_{knots[0]}^{x} f`` for ``f >= 0``.

    Panel integrals between consecutive knots are computed once; a point
    query then needs a single short local quadrature. Because ``f`` is
    nonnegative the map is nondecreasing, so levels can be inverted by
    bisection.
    """

    def __init__(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        knots: np.ndarray,
        spec: QuadratureSpec = DEFAULT_SPEC,
    ):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 1 or len(knots) < 2 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing with at least two entries")
        self.f = f
        self.knots = knots
        self.spec = spec
        panels = [integrate(f, a, b, spec) for a, b in zip(knots[:-1], knots[1:])]
        self.prefix = np.concatenate([[0.0], np.cumsum(panels)])

    @property
    def total(self) -> float:
        return float(self.prefix[-1])

    def value(self, x: float) -> float:
        if x <= self.knots[0]:
            return 0.0
        if x >= self.knots[-1]:
            return self.total
        j = int(np.searchsorted(self.knots, x, side="right") - 1)
        return float(self.prefix[j] + integrate(self.f, float(self.knots[j]), x, self.spec))

    def inverse(self, level: float, tol: float = 1e-13) -> float:
        """Smallest x with value(x) >= level (level clipped to [0, total])."""
        if level <= 0.0:
            return float(self.knots[0])
        if level >= self.total:
            return float(self.knots[-1])
        j = int(np.searchsorted(self.prefix, level, side="left") - 1)
        j = max(0, min(j, len(self.knots) - 2))
        lo, hi = float(self.knots[j]), float(self.knots[j + 1])
        g = lambda x: self.value(x) - level
        bracket = RootBracket(lo, hi, -1, 1)
        return find_root_monotone(g, bracket, tol)
