"""Limit model of the k-window threshold relaxation (horizon length -> infinity).

After rescaling quantiles by ``q = -log(y) / n`` the relaxation becomes a
program free of the horizon length, whose optimal solutions are densities

    w_t(y) = -v * y * log(y) / (1 - y^(1/k))   on (y_t, y_{t-1}),

with breakpoints ``1 = y_0 >= y_1 >= ... >= y_k = 0``. Everything here is
driven by the window mass integral

    H(x) = int_0^x -log(y) / (1 - y^(1/k)) dy,

which is strictly increasing with H(0) = 0. Given a candidate value ``v``,
the breakpoints are produced greedily (each stage is one monotone
bisection against H); the candidate is feasible exactly when the final
stage constraint still has nonnegative slack, so the optimal value is
found by an outer bisection on ``v``. The same construction, with window
exponents ``theta`` and ``1 - theta`` instead of ``1/k``, handles the
two-window model with unequal window lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import (
    CumulativeIntegral,
    QuadratureSpec,
    RootBracket,
    find_root_monotone,
)

__all__ = [
    "InfiniteBreakpoints",
    "TwoThresholdTheta",
    "InfeasibleAtStage",
    "H",
    "H_phi",
    "breakpoints_given_v",
    "solve_v_infinity",
    "v_infinity_2_theta",
    "optimize_theta",
    "V_LOWER_BRACKET",
    "V_UPPER_BRACKET",
    "MAX_K",
]

SIX_OVER_PI_SQ = 6.0 / math.pi**2

# Value bracket for the outer bisection: the k = 1 optimum bounds every k
# from below; every finite k stays strictly below the fully-dynamic
# constant 0.745440..., so a ceiling just above it is always infeasible.
# (Values pass 0.7453 near k = 45, so the ceiling must clear the constant
# itself, not undercut it.)
V_LOWER_BRACKET = SIX_OVER_PI_SQ - 0.01
V_UPPER_BRACKET = 0.7455

# Beyond this the per-k values saturate at the fully-dynamic constant
# within print precision; refuse rather than silently degrade.
MAX_K = 64

_Y_TOL = 1e-12
_RES_TOL = 1e-12
_TABLE_SPEC = QuadratureSpec(abs_tol=1e-15, rel_tol=5e-13, max_subdivisions=10**6)


@dataclass(frozen=True)
class InfiniteBreakpoints:
    """Optimal (or candidate) breakpoints of the limit model.

    ``y`` has k+1 entries including both endpoints y_0 = 1 and y_k = 0.
    ``residuals`` holds the k per-stage constraint slacks; interior stages
    that were solved by bisection sit at (numerical) zero, the last entry
    is the binding feasibility margin.
    """

    k: int
    v: float
    y: tuple[float, ...]
    residuals: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"k": self.k, "v": self.v, "y": list(self.y), "residuals": list(self.residuals)}


@dataclass(frozen=True)
class TwoThresholdTheta:
    """Two-window limit model with window fractions theta and 1 - theta."""

    theta: float
    v: float
    y1: float
    residuals: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "v": self.v,
            "y1": self.y1,
            "residuals": list(self.residuals),
        }


@dataclass(frozen=True)
class InfeasibleAtStage:
    """Marker: no feasible breakpoint exists at ``stage`` for the given v."""

    stage: int
    deficit: float  # how far the required level exceeds the reachable one


def _knots() -> np.ndarray:
    # dense near both endpoints of the substituted variable u = y^(1/k);
    # near 0 this resolves y down to ~1e-16^k, near 1 it resolves the
    # removable singularity of (-log u)/(1-u)
    lo = np.geomspace(1e-16, 0.05, 41)
    mid = np.linspace(0.05, 0.95, 46)[1:-1]
    hi = 1.0 - np.geomspace(1e-16, 0.05, 41)
    return np.unique(np.concatenate([[0.0], lo, mid, hi, [1.0]]))


class _HTable:
    """H for one window exponent, backed by a cumulative panel table.

    The change of variable u = y^phi turns the integrand into
    p^2 * u^(p-1) * (-log u)/(1 - u) with p = 1/phi, which is bounded at
    u = 1 (limit p^2) and vanishing at u = 0 for p > 1.
    """

    def __init__(self, phi: float):
        if not 0.0 < phi <= 1.0:
            raise ValueError(f"window exponent must lie in (0, 1], got {phi!r}")
        self.phi = phi
        p = 1.0 / phi

        def g(u: np.ndarray) -> np.ndarray:
            u = np.asarray(u, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(u < 1.0, -np.log(u) / (1.0 - u), 1.0)
            out = p * p * u ** (p - 1.0) * ratio
            return np.where(u <= 0.0, 0.0 if p > 1.0 else np.inf, out)

        self._table = CumulativeIntegral(g, _knots(), _TABLE_SPEC)

    def __call__(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return self._table.total
        return self._table.value(x**self.phi)

    def inverse(self, level: float) -> float:
        """Smallest x in [0, 1] with H(x) >= level."""
        u = self._table.inverse(level, tol=_Y_TOL)
        return u ** (1.0 / self.phi)


@lru_cache(maxsize=128)
def _h_table(phi: float) -> _HTable:
    return _HTable(phi)


def H(k: int, x: float) -> float:
    """Window mass integral int_0^x -log(y) / (1 - y^(1/k)) dy.

    Strictly increasing in x with H(0) = 0; H(1) for k = 1 equals
    pi^2 / 6 (the integrand sums the series for zeta(2)).
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return _h_table(1.0 / k)(x)


def H_phi(phi: float, x: float) -> float:
    """Generalization of H with an arbitrary window exponent phi in (0, 1)."""
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi!r}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return _h_table(phi)(x)


def _xlog_term(y: float) -> float:
    """y * (log y - 1) extended by its limit 0 at y = 0."""
    return y * (math.log(y) - 1.0) if y > 0.0 else 0.0


def breakpoints_given_v(k: int, v: float) -> InfiniteBreakpoints | InfeasibleAtStage:
    """Greedy breakpoint construction for a candidate value ``v``.

    Stage 1 picks the smallest y_1 with ``1/v - H(1) + H(y_1) >= 0``; each
    later stage picks the smallest y_t in [0, y_{t-1}] restoring the
    window mass balance

        H(y_{t-2}) - 2 H(y_{t-1}) + H(y_t)
            + y_{t-2}(log y_{t-2} - 1) - y_{t-1}(log y_{t-1} - 1) >= 0.

    H is increasing, so every stage is a single monotone bisection. The
    construction cannot fail for feasible v; if some stage has no
    solution, or the final stage constraint (evaluated at y_k = 0) has
    negative slack, the candidate value is too large. The returned
    residuals make that decision auditable.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not v > 0:
        raise ValueError(f"v must be positive, got {v!r}")
    table = _h_table(1.0 / k)
    ys = [1.0]
    residuals: list[float] = []
    for stage in range(1, k):
        prev = ys[stage - 1]
        if stage == 1:
            offset = 1.0 / v - table(1.0)
        else:
            offset = (
                table(ys[stage - 2])
                - 2.0 * table(ys[stage - 1])
                + _xlog_term(ys[stage - 2])
                - _xlog_term(ys[stage - 1])
            )
        if offset >= 0.0:
            ys.append(0.0)
            residuals.append(offset)
            continue
        level = -offset
        reachable = table(prev)
        if level > reachable + _RES_TOL:
            return InfeasibleAtStage(stage=stage, deficit=level - reachable)
        y = min(table.inverse(level), prev)
        ys.append(y)
        residuals.append(table(y) + offset)
    # final stage, y_k = 0
    if k == 1:
        final = 1.0 / v - table(1.0)
    else:
        final = (
            table(ys[k - 2])
            - 2.0 * table(ys[k - 1])
            + _xlog_term(ys[k - 2])
            - _xlog_term(ys[k - 1])
        )
    ys.append(0.0)
    residuals.append(final)
    return InfiniteBreakpoints(k=k, v=v, y=tuple(ys), residuals=tuple(residuals))


def _feasible(k: int, v: float) -> bool:
    result = breakpoints_given_v(k, v)
    if isinstance(result, InfeasibleAtStage):
        return False
    return result.residuals[-1] >= -_RES_TOL


def solve_v_infinity(k: int, delta: float = 1e-8) -> InfiniteBreakpoints:
    """Optimal value and breakpoints of the limit model, to within ``delta``.

    Bisection on v over a bracket proved valid for 1 <= k <= MAX_K; the
    returned v is the certified-feasible endpoint, so its breakpoints
    satisfy every stage constraint.
    """
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in [1, {MAX_K}], got {k!r}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = V_LOWER_BRACKET, V_UPPER_BRACKET
    if not _feasible(k, lo):  # pragma: no cover - bracket is proved valid
        raise RuntimeError(f"lower value bracket unexpectedly infeasible for k={k}")
    if _feasible(k, hi):  # pragma: no cover
        raise RuntimeError(f"upper value bracket unexpectedly feasible for k={k}")
    while hi - lo > delta:
        mid = 0.5 * (lo + hi)
        if _feasible(k, mid):
            lo = mid
        else:
            hi = mid
    result = breakpoints_given_v(k, lo)
    assert isinstance(result, InfiniteBreakpoints)
    return result


def _feasible_theta(theta: float, v: float) -> tuple[bool, float, tuple[float, float]]:
    """Feasibility of the two-window theta model at value v.

    Returns (feasible, y1, residuals). Window 1 carries exponent theta,
    window 2 exponent 1 - theta; y_2 = 0.
    """
    h1 = _h_table(theta)
    h2 = _h_table(1.0 - theta)
    top = h1(1.0)
    level = top - 1.0 / v
    if level <= 0.0:
        y1 = 0.0
    elif level > top:  # pragma: no cover - level <= top by construction
        return False, 0.0, (-(level - top), 0.0)
    else:
        y1 = h1.inverse(level)
    res1 = 1.0 / v - top + h1(y1)
    res2 = top - h1(y1) - h2(y1) - 1.0 - _xlog_term(y1)
    return res2 >= -_RES_TOL, y1, (res1, res2)


def v_infinity_2_theta(theta: float, delta: float = 1e-8) -> TwoThresholdTheta:
    """Optimal value of the two-window limit model at window split ``theta``.

    Requires theta in [1/2, 1): the analysis assumes the first window is
    the longer one. The visible behavior: the value peaks near theta 0.61
    and falls back toward the one-window optimum as theta -> 1.
    """
    if not 0.5 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0.5, 1), got {theta!r}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = 0.55, V_UPPER_BRACKET
    if not _feasible_theta(theta, lo)[0]:  # pragma: no cover
        raise RuntimeError("lower bracket unexpectedly infeasible in theta model")
    while hi - lo > delta:
        mid = 0.5 * (lo + hi)
        if _feasible_theta(theta, mid)[0]:
            lo = mid
        else:
            hi = mid
    _, y1, residuals = _feasible_theta(theta, lo)
    return TwoThresholdTheta(theta=theta, v=lo, y1=y1, residuals=residuals)


def optimize_theta(resolution: int, delta: float = 1e-8) -> tuple[float, TwoThresholdTheta]:
    """Grid sweep of the two-window split over multiples of 1/resolution.

    Evaluates theta in [1/2, 1) and returns the maximizer; exact ties are
    broken toward the smaller theta (the grid order).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    best: TwoThresholdTheta | None = None
    for i in range(resolution // 2, resolution):
        theta = i / resolution
        if not 0.5 <= theta < 1.0:
            continue
        cand = v_infinity_2_theta(theta, delta)
        if best is None or cand.v > best.v:
            best = cand
    assert best is not None
    return best.theta, best
