"""Finite-horizon solvers for the k-window threshold relaxation.

For a horizon of n draws split into windows of lengths tau_1..tau_k, the
relaxation's optimal solution is characterized by quantile breakpoints
``0 = eps_0 <= eps_1 <= ... <= eps_k = 1`` and a value v solving

    1 = v n(n-1) int_0^{eps_1} q (1-q)^(n-2) / (1 - (1-q)^tau_1) dq

together with a stage-by-stage mass balance between consecutive windows.
The balance collapses (by telescoping) to one identity per stage,

    int_{eps_t}^{eps_{t+1}} q(1-q)^(n-2)/(1-(1-q)^{tau_{t+1}}) dq
        = 1/(v n(n-1)) - int_0^{eps_t} q (1-q)^(n-2) dq,

whose right side has the closed form used below. Each eps_{t+1} is a
monotone bisection; eps_k(v) is strictly decreasing in v, so the optimal
value (where eps_k hits 1) is an outer bisection.

Optimality is certified by an explicit dual solution: step heights a_t
built from the breakpoints, a nondecreasing state function F, and a
backward supremum recursion d_k..d_1 whose suprema are attained on the
finite breakpoint set. At the optimum d_1 = a_1 = v, realized here to
machine precision, which is the numerical strong-duality check.

The module also solves the exact two-window system for the limit of the
unrelaxed problem (deterministic quantile pair a_1/n, a_2/n) and its
3x3 dual, the strongest two-threshold guarantee available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .numerics import CumulativeIntegral, QuadratureSpec

__all__ = [
    "WindowPlan",
    "EpsilonSchedule",
    "StageInfeasible",
    "DualCertificate",
    "TwoThresholdExact",
    "gamma_n_1",
    "epsilon_schedule",
    "solve_v_finite",
    "dual_certificate",
    "two_threshold_exact",
]

_TABLE_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_subdivisions=10**6)
_EPS_TOL = 1e-13


@dataclass(frozen=True)
class WindowPlan:
    """Window lengths tau_1..tau_k summing to the horizon n."""

    n: int
    k: int
    taus: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1 or self.k > self.n:
            raise ValueError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if len(self.taus) != self.k or any(t < 1 for t in self.taus):
            raise ValueError("plan needs k window lengths, all >= 1")
        if sum(self.taus) != self.n:
            raise ValueError(f"window lengths must sum to n={self.n}, got {sum(self.taus)}")

    @classmethod
    def default(cls, n: int, k: int) -> "WindowPlan":
        """Equal windows: k-1 windows of ceil(n/k) and a (possibly shorter) last one."""
        tau = math.ceil(n / k)
        last = n - (k - 1) * tau
        if last < 1:
            raise ValueError(f"equal-window plan degenerates for n={n}, k={k}")
        return cls(n=n, k=k, taus=(tau,) * (k - 1) + (last,))

    @property
    def is_equal_window(self) -> bool:
        """tau_1 = ... = tau_{k-1} >= tau_k, the shape the solver supports."""
        if self.k == 1:
            return True
        head = set(self.taus[:-1])
        return len(head) == 1 and self.taus[-1] <= self.taus[0]


@dataclass(frozen=True)
class EpsilonSchedule:
    """Breakpoints eps_0..eps_k for a value v; at the optimum eps_k = 1."""

    plan: WindowPlan
    v: float
    eps: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "n": self.plan.n,
            "k": self.plan.k,
            "taus": list(self.plan.taus),
            "v": self.v,
            "eps": list(self.eps),
        }


@dataclass(frozen=True)
class StageInfeasible:
    """The recursion has no solution at ``stage``.

    kind = "negative-budget": the identity's right side went negative, the
    candidate v is too large. kind = "breakpoint-above-one": eps at this
    stage would exceed 1, the candidate v is too small (for any v below
    the optimum the final stage necessarily fails this way).
    ``eps_prefix`` holds the breakpoints solved before the failure.
    """

    stage: int
    kind: str
    detail: float
    eps_prefix: tuple[float, ...] = (0.0,)


def gamma_n_1(n: int) -> float:
    """Optimal single-threshold ratio, 1 - (1 - 1/n)^n; at least 1 - 1/e."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return 1.0 - (1.0 - 1.0 / n) ** n


def _pow1m(q: np.ndarray, e: float) -> np.ndarray:
    """(1-q)^e computed in log space; e = 0 gives exactly 1."""
    if e == 0:
        return np.ones_like(np.asarray(q, dtype=float))
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(e * np.log1p(-q))
    return np.where(q >= 1.0, 0.0, out)


def _int_q_pow(n: int, eps: float) -> float:
    """int_0^eps q (1-q)^(n-2) dq = (1 - (1-eps)^(n-1) (1 + (n-1) eps)) / (n(n-1))."""
    if eps <= 0.0:
        return 0.0
    pw = math.exp((n - 1) * math.log1p(-eps)) if eps < 1.0 else 0.0
    return (1.0 - pw * (1.0 + (n - 1) * eps)) / (n * (n - 1))


def _phi_knots(n: int) -> np.ndarray:
    # breakpoints live at the 1/n scale; resolve several decades below it
    return np.unique(np.concatenate([[0.0], np.geomspace(1e-12, 1.0, 161)]))


class _PhiTable:
    """Cumulative integral of q (1-q)^(n-2) / (1 - (1-q)^tau) on [0, 1]."""

    def __init__(self, n: int, tau: int):
        self.n, self.tau = n, tau

        def f(q: np.ndarray) -> np.ndarray:
            q = np.asarray(q, dtype=float)
            num = q * _pow1m(q, n - 2)
            den = -np.expm1(tau * np.log1p(-np.minimum(q, 1.0 - 1e-17)))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = num / den
            # removable limit q/(1-(1-q)^tau) -> 1/tau at q = 0
            return np.where(q < 1e-14, _pow1m(q, n - 2) / tau, ratio)

        self._table = CumulativeIntegral(f, _phi_knots(n), _TABLE_SPEC)

    def between(self, a: float, b: float) -> float:
        return self._table.value(b) - self._table.value(a)

    def solve_upper(self, a: float, target: float) -> float | None:
        """Smallest b in [a, 1] with between(a, b) >= target, or None."""
        base = self._table.value(a)
        if base + target > self._table.total + 1e-18:
            return None
        return self._table.inverse(base + target, tol=_EPS_TOL)


@lru_cache(maxsize=64)
def _phi_table(n: int, tau: int) -> _PhiTable:
    return _PhiTable(n, tau)


def epsilon_schedule(plan: WindowPlan, v: float) -> EpsilonSchedule | StageInfeasible:
    """Breakpoints for a candidate value v on an equal-window plan.

    Fails softly with a :class:`StageInfeasible` carrying the stage index
    and the direction of failure, which is exactly the sign the outer
    bisection needs.
    """
    if not v > 0:
        raise ValueError(f"v must be positive, got {v!r}")
    if plan.n < 2:
        raise ValueError("the breakpoint system needs n >= 2 (n = 1 is the trivial policy)")
    if not plan.is_equal_window:
        raise ValueError("epsilon_schedule supports equal-window plans only")
    n = plan.n
    eps = [0.0]
    for stage in range(1, plan.k + 1):
        budget = 1.0 / (v * n * (n - 1)) - _int_q_pow(n, eps[stage - 1])
        if budget < 0.0:
            return StageInfeasible(stage=stage, kind="negative-budget", detail=budget,
                                   eps_prefix=tuple(eps))
        table = _phi_table(n, plan.taus[stage - 1])
        nxt = table.solve_upper(eps[stage - 1], budget)
        if nxt is None:
            deficit = budget - table.between(eps[stage - 1], 1.0)
            return StageInfeasible(stage=stage, kind="breakpoint-above-one", detail=deficit,
                                   eps_prefix=tuple(eps))
        eps.append(min(max(nxt, eps[stage - 1]), 1.0))
    return EpsilonSchedule(plan=plan, v=v, eps=tuple(eps))


def _classify(plan: WindowPlan, v: float) -> int:
    """Sign of eps_k(v) - 1: +1 when v below optimum, -1 above, 0 at it."""
    result = epsilon_schedule(plan, v)
    if isinstance(result, StageInfeasible):
        return 1 if result.kind == "breakpoint-above-one" else -1
    if result.eps[-1] >= 1.0:
        return 1
    return -1


def solve_v_finite(plan: WindowPlan, delta: float = 1e-9) -> EpsilonSchedule:
    """Optimal value of the relaxation for the given plan, to within delta.

    Outer bisection on v using the strict monotonicity of eps_k(v). The
    bracket [0.55, 1] covers every plan we have ever evaluated (values lie
    in (6/pi^2 - o(1), 0.86]); the lower end expands automatically if a
    plan falls outside it. The returned schedule has eps_k pinned to 1,
    which defines the optimum.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = 0.55, 1.0
    # eps_k(1) < 1 always holds, so hi is a valid upper end
    expansions = 0
    while _classify(plan, lo) < 0:
        lo *= 0.5
        expansions += 1
        if expansions > 20:  # pragma: no cover
            raise RuntimeError("could not bracket the optimal value from below")
    while hi - lo > delta:
        mid = 0.5 * (lo + hi)
        if _classify(plan, mid) > 0:
            lo = mid
        else:
            hi = mid
    # rebuild the interior breakpoints at the feasible endpoint and pin
    # eps_k = 1 (its defining property at the optimum)
    n = plan.n
    eps = [0.0]
    for stage in range(1, plan.k):
        budget = 1.0 / (lo * n * (n - 1)) - _int_q_pow(n, eps[-1])
        nxt = _phi_table(n, plan.taus[stage - 1]).solve_upper(eps[-1], budget)
        assert nxt is not None
        eps.append(min(nxt, 1.0))
    eps.append(1.0)
    return EpsilonSchedule(plan=plan, v=lo, eps=tuple(eps))


@dataclass(frozen=True)
class DualCertificate:
    """Dual solution certifying optimality of an :class:`EpsilonSchedule`.

    a: step heights a_1..a_{k+1} (a_{k+1} = 0), nonincreasing.
    h: the k-1 decay factors linking consecutive step gaps.
    d: the backward supremum recursion values d_1..d_k; d_t = a_t at the
       optimum and d_1 is the certified value.
    F: the nondecreasing state function on [0, 1], continuous at every
       interior breakpoint.
    """

    schedule: EpsilonSchedule
    a: tuple[float, ...]
    h: tuple[float, ...]
    d: tuple[float, ...]
    F: Callable[[float], float]
    continuity_gaps: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "v": self.schedule.v,
            "a": list(self.a),
            "h": list(self.h),
            "d": list(self.d),
            "continuity_gaps": list(self.continuity_gaps),
        }


class CertificateUndefined(ValueError):
    """Dual certificate requested for a schedule that is not at the optimum."""


def _pow1m_f(q: float, e: float) -> float:
    if e == 0:
        return 1.0
    if q >= 1.0:
        return 0.0
    return math.exp(e * math.log1p(-q))


def dual_certificate(schedule: EpsilonSchedule, tol: float = 1e-8) -> DualCertificate:
    """Dual solution for an optimal schedule; raises if eps_k != 1.

    The suprema defining d_t are evaluated on the breakpoint set
    {eps_1..eps_k}: between breakpoints the objective of each supremum is
    monotone, so the maximum always lands on a breakpoint.
    """
    if abs(schedule.eps[-1] - 1.0) > tol:
        raise CertificateUndefined(
            f"certificate needs eps_k = 1 (within {tol!r}), got {schedule.eps[-1]!r}"
        )
    plan, v, eps = schedule.plan, schedule.v, schedule.eps
    k, taus = plan.k, plan.taus

    # decay factors between consecutive step gaps
    h = []
    for r in range(1, k):
        er = eps[r]
        t_r, t_r1 = taus[r - 1], taus[r]
        h.append(
            _pow1m_f(er, t_r1) * (1.0 - _pow1m_f(er, t_r)) / (1.0 - _pow1m_f(er, t_r1))
        )

    def tail_sum(t: int) -> float:
        total = 0.0
        prod = 1.0
        for r in range(k - 1, t - 1, -1):  # prod of h_r for r = s..k-1, accumulated
            prod *= h[r - 1]
            total += prod
        return total

    denom = 1.0 + tail_sum(1)
    a = tuple(v * (1.0 + tail_sum(t)) / denom for t in range(1, k + 1)) + (0.0,)

    def piece_of(q: float) -> int:
        for t in range(1, k + 1):
            if q < eps[t]:
                return t
        return k

    def F_piece(q: float, t: int) -> float:
        tau_t = taus[t - 1]
        if q <= 0.0:
            return (a[0] - a[1]) / taus[0]
        pw = _pow1m_f(q, tau_t)
        return (a[t - 1] - a[t] * pw) * q / (1.0 - pw)

    def F(q: float) -> float:
        if not 0.0 <= q <= 1.0:
            raise ValueError("F is defined on [0, 1]")
        return F_piece(q, piece_of(q))

    gaps = tuple(
        abs(F_piece(eps[t], t) - F_piece(eps[t], t + 1)) for t in range(1, k)
    )

    # backward supremum recursion over the breakpoint candidates
    d: list[float] = [0.0] * (k + 2)
    for t in range(k, 0, -1):
        tau_t = taus[t - 1]
        best = -math.inf
        for s in range(1, k + 1):
            q = eps[s]
            if q <= 0.0:
                continue
            Fq = F_piece(q, min(s + 1, k)) if s < k else F_piece(q, k)
            pw = _pow1m_f(q, tau_t)
            best = max(best, (1.0 - pw) / q * Fq + pw * d[t + 1])
        d[t] = best

    return DualCertificate(
        schedule=schedule,
        a=a,
        h=tuple(h),
        d=tuple(d[1 : k + 1]),
        F=F,
        continuity_gaps=gaps,
    )


@dataclass(frozen=True)
class TwoThresholdExact:
    """Exact two-window limit solution and its dual.

    u2 parametrizes the primal system; a1 and a2 are the deterministic
    quantile parameters (prices are taken at quantiles a1/n and a2/n),
    theta the optimal first-window fraction, v_bar the certified ratio.
    The dual weights (a, b, c) solve the 3x3 stationarity system and
    reproduce v_bar as the dual objective d1.
    """

    u2: float
    theta: float
    a1: float
    a2: float
    v_bar: float
    dual_a: float
    dual_b: float
    dual_c: float
    d1: float
    d2: float

    def to_dict(self) -> dict:
        return {
            "u2": self.u2,
            "theta": self.theta,
            "a1": self.a1,
            "a2": self.a2,
            "v_bar": self.v_bar,
            "dual": {"a": self.dual_a, "b": self.dual_b, "c": self.dual_c},
            "d1": self.d1,
            "d2": self.d2,
        }


def _a1_of(u: float) -> float:
    return 1.0 - u * math.exp(-u) / (-math.expm1(-u))

def _a2_of(u: float) -> float:
    return u + 1.0


def _implicit_theta_u(theta: float, u: float) -> float:
    """Stationarity link between theta and u for the two-window system.

    Derived from the three-equation system for the limit multiplier
    function by eliminating its value at the interior minimum. Zero
    exactly when (theta, u) is consistent.
    """
    a1, a2 = _a1_of(u), _a2_of(u)
    lhs = -math.exp(-u) - u * math.exp(-u)
    rhs = math.exp(-a1 * theta - a2 * (1.0 - theta)) * (
        1.0 - math.exp(-u) - u * math.exp(-u)
    ) - math.exp(-a1 * theta)
    return lhs - rhs


def _vbar(theta: float, u: float) -> float:
    return -math.expm1(-_a1_of(u) * theta - _a2_of(u) * (1.0 - theta))


def _solve_u(theta: float, tol: float = 1e-10) -> float:
    lo, hi = 1e-6, 8.0
    flo = _implicit_theta_u(theta, lo)
    fhi = _implicit_theta_u(theta, hi)
    if flo * fhi > 0:  # pragma: no cover
        raise RuntimeError(f"u bracket invalid at theta={theta!r}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _implicit_theta_u(theta, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@lru_cache(maxsize=1)
def two_threshold_exact() -> TwoThresholdExact:
    """Solve the exact two-window limit system and its dual.

    Nested root finding: for each window fraction theta the implicit
    stationarity equation pins u by bisection (inner tolerance 1e-10);
    golden-section then maximizes the value over theta (outer 1e-8).
    The dual 3x3 linear system is assembled from the first-order
    optimality of the two supremum problems and solved numerically, and
    the dual objective d1 is evaluated by maximizing the two supremum
    functions directly (coarse grid plus golden refinement).
    """
    theta = _golden_max(lambda th: _vbar(th, _solve_u(th)), 0.5, 0.75, 1e-8)
    u2 = _solve_u(theta, tol=1e-12)
    a1, a2 = _a1_of(u2), _a2_of(u2)
    v_bar = _vbar(theta, u2)

    e_u = math.exp(-u2)
    ea1 = math.exp(-theta * a1)
    ea2 = math.exp(-(1.0 - theta) * a2)
    # unknowns (A, B, C): total mass, inner level, outer level of the dual
    # density; rows: total-mass normalization, stationarity of the first
    # and second supremum problems at a1 and a2
    m = np.zeros((3, 3))
    rhs = np.zeros(3)
    m[0] = [1.0, 1.0 - e_u, e_u]
    rhs[0] = 1.0
    p1 = (1.0 - ea1) / a1
    p2 = (theta * ea1 * a1 - (1.0 - ea1)) / a1**2
    p3 = theta * ea1 * (1.0 - ea2) / a2
    m[1] = [p2 - p3, p1 + p2 * a1 - p3 * u2, -p3 * (a2 - u2)]
    q1 = (1.0 - ea2) / a2
    q2 = ((1.0 - theta) * ea2 * a2 - (1.0 - ea2)) / a2**2
    m[2] = [q2, q2 * u2, q1 + q2 * (a2 - u2)]
    dual = np.linalg.solve(m, rhs)
    da, db, dc = (float(x) for x in dual)

    def cum(x: float) -> float:
        return da + db * x if x <= u2 else da + db * u2 + dc * (x - u2)

    def g2(x: float) -> float:
        return -math.expm1(-(1.0 - theta) * x) / x * cum(x)

    xs = np.geomspace(1e-3, 40.0, 400)
    i2 = int(np.argmax([g2(float(x)) for x in xs]))
    d2 = g2(_golden_max(g2, float(xs[max(i2 - 1, 0)]), float(xs[min(i2 + 1, len(xs) - 1)]), 1e-12))

    def g1(x: float) -> float:
        return -math.expm1(-theta * x) / x * cum(x) + math.exp(-theta * x) * d2

    i1 = int(np.argmax([g1(float(x)) for x in xs]))
    d1 = g1(_golden_max(g1, float(xs[max(i1 - 1, 0)]), float(xs[min(i1 + 1, len(xs) - 1)]), 1e-12))

    return TwoThresholdExact(
        u2=u2, theta=theta, a1=a1, a2=a2, v_bar=v_bar,
        dual_a=da, dual_b=db, dual_c=dc, d1=d1, d2=d2,
    )
