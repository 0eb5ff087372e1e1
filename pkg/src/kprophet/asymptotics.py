"""Large-k behavior of the limit model via an ODE's Euler discretizations.

The breakpoints of the limit model track the solution of

    w'(t) = w(t) (log w(t) - 1) - (beta - 1),   w(0) = 1,

where beta is the reciprocal of the model value. Two explicit Euler
sequences (step 1/k, and the slightly smaller step 1/((32k)^(1/k) k))
sandwich the true breakpoints, and the crossing scale of the ODE is
governed by

    I(beta) = int_0^1 (beta - 1 + w (1 - log w))^(-1) dw,

which is strictly decreasing with a unique root of I(beta) = 1 near
beta = 1.341. Its reciprocal is the fully-dynamic constant that the
k-window values approach from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .infinite_model import solve_v_infinity
from .numerics import DEFAULT_SPEC, QuadratureSpec, RootBracket, find_root_monotone, integrate

__all__ = [
    "EulerTrace",
    "SandwichReport",
    "I",
    "beta_bar",
    "euler_sequences",
    "verify_sandwich",
    "asymptotic_bands",
]


def I(beta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Crossing-scale integral int_0^1 dw / (beta - 1 + w(1 - log w)).

    Defined for beta > 1 (the denominator is then positive on (0, 1]);
    strictly decreasing in beta. The integrand's value at w = 0 is the
    finite limit 1 / (beta - 1).
    """
    if not beta > 1.0:
        raise ValueError(f"I(beta) requires beta > 1, got {beta!r}")

    def f(w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(w > 0.0, w * (1.0 - np.log(w)), 0.0)
        return 1.0 / (beta - 1.0 + t)

    return integrate(f, 0.0, 1.0, spec)


@lru_cache(maxsize=8)
def beta_bar(tol: float = 1e-6) -> tuple[float, float]:
    """Root of I(beta) = 1 by bisection on [1.25, 1.5]; returns (beta, 1/beta)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    g = lambda b: I(b) - 1.0
    root = find_root_monotone(g, RootBracket.from_function(g, 1.25, 1.5), tol)
    return root, 1.0 / root


@dataclass(frozen=True)
class EulerTrace:
    """Euler discretizations sandwiching the limit-model breakpoints.

    x uses step 1/k, z the smaller step 1/((32k)^(1/k) k); both start at
    1, are nonincreasing, and clamp at 0 permanently.
    """

    k: int
    beta_star: float
    x: tuple[float, ...]
    z: tuple[float, ...]


def _drift(w: float, beta: float) -> float:
    # w(1 - log w) extended by its limit 0 at w = 0
    return beta - 1.0 + (w * (1.0 - math.log(w)) if w > 0.0 else 0.0)


def euler_sequences(k: int, beta_star: float) -> EulerTrace:
    """Both Euler sequences for k steps at the given beta."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not beta_star >= 1.25:
        raise ValueError(f"beta_star must be >= 1.25, got {beta_star!r}")
    step_z = 1.0 / ((32.0 * k) ** (1.0 / k) * k)
    x = [1.0]
    z = [1.0]
    for t in range(k):
        x.append(max(0.0, x[t] - _drift(x[t], beta_star) / k))
        z.append(max(0.0, z[t] - step_z * _drift(z[t], beta_star)))
    return EulerTrace(k=k, beta_star=beta_star, x=tuple(x), z=tuple(z))


@dataclass(frozen=True)
class SandwichReport:
    """Per-index margins of the sandwich inequalities at one k.

    lower_margins[t] = y_t - x_t                      (>= 0 required)
    upper_margins[t] = x_t + 4 log(32k)/k - y_t       (>= 0 required)
    floor_margins[l-1] = y_{k-l} - l/(32k)            (>= 0 required)
    """

    k: int
    beta_star: float
    v: float
    y: tuple[float, ...]
    x: tuple[float, ...]
    z: tuple[float, ...]
    lower_margins: tuple[float, ...]
    upper_margins: tuple[float, ...]
    floor_margins: tuple[float, ...]
    passed: bool
    first_violation: tuple[str, int] | None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "beta_star": self.beta_star,
            "v": self.v,
            "y": list(self.y),
            "x": list(self.x),
            "z": list(self.z),
            "lower_margins": list(self.lower_margins),
            "upper_margins": list(self.upper_margins),
            "floor_margins": list(self.floor_margins),
            "passed": self.passed,
            "first_violation": list(self.first_violation) if self.first_violation else None,
        }


def verify_sandwich(k: int, slack: float = 1e-9) -> SandwichReport:
    """Check the Euler sandwich against the solved limit-model breakpoints.

    Solves the limit model at this k, builds the Euler trace at
    beta = 1/v, and verifies x_t <= y_t <= x_t + 4 log(32k)/k for every t
    plus the breakpoint floor y_{k-l} >= l/(32k). The analysis behind the
    sandwich assumes k >= 6.
    """
    if k < 6:
        raise ValueError("the sandwich analysis requires k >= 6")
    bp = solve_v_infinity(k)
    beta_star = 1.0 / bp.v
    trace = euler_sequences(k, beta_star)
    y, x = bp.y, trace.x
    band = 4.0 * math.log(32.0 * k) / k
    lower = tuple(y[t] - x[t] for t in range(k + 1))
    upper = tuple(x[t] + band - y[t] for t in range(k + 1))
    floor = tuple(y[k - ell] - ell / (32.0 * k) for ell in range(1, k + 1))
    first: tuple[str, int] | None = None
    for t, m in enumerate(lower):
        if m < -slack:
            first = ("lower", t)
            break
    if first is None:
        for t, m in enumerate(upper):
            if m < -slack:
                first = ("upper", t)
                break
    if first is None:
        for i, m in enumerate(floor):
            if m < -slack:
                first = ("floor", i + 1)
                break
    return SandwichReport(
        k=k,
        beta_star=beta_star,
        v=bp.v,
        y=bp.y,
        x=trace.x,
        z=trace.z,
        lower_margins=lower,
        upper_margins=upper,
        floor_margins=floor,
        passed=first is None,
        first_violation=first,
    )


def asymptotic_bands(k: int) -> tuple[float, float]:
    """Diagnostic envelopes gamma_bar (1 - 512 log(32k)/k) and (1 - 4 log(32k)/k).

    These are the proved large-k envelopes around the limit-model value;
    the constants are loose, so for small k the lower band is negative
    and the pair is reported as a diagnostic, never asserted against
    computed values.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    _, gamma = beta_bar(1e-8)
    c = math.log(32.0 * k) / k
    return gamma * (1.0 - 512.0 * c), gamma * (1.0 - 4.0 * c)
