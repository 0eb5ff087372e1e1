"""Discretized linear programs as a brute-force oracle at desk scale.

Replacing the quantile axis [0, 1] by the grid {0, 1/m, ..., 1} turns the
window-threshold program and its dual into ordinary finite LPs. Solving
both and watching the duality gap close is an end-to-end cross-check of
the analytic solvers, independent of any of their machinery. The solver
is a dense two-phase tableau simplex with Bland's anti-cycling rule; the
deliberately small size caps (m <= 500, k*m <= 2000) reflect its role as
an oracle, not a production LP code.

Orientations:

* minimize-D: variables d_1..d_k and grid values f_0..f_m of the
  nonincreasing inverse-quantile profile; k*m dynamic rows, one
  normalization equality (encoded as two inequalities), m monotonicity
  rows.
* maximize-P: variables alpha_{t,i}, the value v, and eta_0..eta_{m+1};
  the two boundary etas are pinned to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .finite_model import WindowPlan

__all__ = [
    "DiscretizedLP",
    "SimplexResult",
    "SizeCapError",
    "build_D",
    "build_P",
    "solve",
    "to_lp_text",
    "M_CAP",
    "KM_CAP",
]

M_CAP = 500
KM_CAP = 2000


class SizeCapError(ValueError):
    """Requested discretization exceeds the documented oracle size caps."""


@dataclass(frozen=True)
class DiscretizedLP:
    """Dense standard-form LP: optimize c'x subject to A x <= b, x >= 0."""

    orientation: str  # "minimize-D" | "maximize-P"
    n: int
    k: int
    m: int
    taus: tuple[int, ...]
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    var_names: tuple[str, ...]
    row_names: tuple[str, ...] = field(repr=False, default=())


@dataclass(frozen=True)
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration-limit"
    objective: float
    x: np.ndarray
    iterations: int
    max_primal_violation: float
    max_dual_violation: float
    complementarity_gap: float

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "iterations": self.iterations,
            "max_primal_violation": self.max_primal_violation,
            "max_dual_violation": self.max_dual_violation,
            "complementarity_gap": self.complementarity_gap,
        }


def _check_caps(k: int, m: int) -> None:
    if m > M_CAP or k * m > KM_CAP:
        raise SizeCapError(
            f"oracle caps are m <= {M_CAP} and k*m <= {KM_CAP}; got m={m}, k*m={k * m}"
        )


def _pow_grid(base_idx: np.ndarray, m: int, e: float) -> np.ndarray:
    """(1 - i/m)^e evaluated stably in log space (coefficients reach e^-n scale)."""
    frac = base_idx / m
    out = np.zeros(len(frac))
    inside = frac < 1.0
    if e == 0:
        return np.ones(len(frac))
    out[inside] = np.exp(e * np.log1p(-frac[inside]))
    return out


def build_D(n: int, k: int, m: int, plan: WindowPlan | None = None) -> DiscretizedLP:
    """Assemble the minimization LP on the m-point grid.

    Rows: for every window t and grid index i >= 1,
        d_t >= ((1 - (1-i/m)^tau_t) / (i/m)) * sum_{l<=i} f_l / m
               + (1 - i/m)^tau_t * d_{t+1},
    plus the normalization sum_l n (1-l/m)^(n-1) f_l / m = 1 (two
    inequality rows) and the monotonicity chain f_{l-1} >= f_l.
    """
    plan = plan or WindowPlan.default(n, k)
    if plan.n != n or plan.k != k:
        raise ValueError("plan does not match n, k")
    if m < k:
        raise ValueError("need m >= k grid points")
    _check_caps(k, m)
    nv = k + (m + 1)
    var_names = tuple(f"d_{t}" for t in range(1, k + 1)) + tuple(f"f_{l}" for l in range(m + 1))
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    row_names: list[str] = []
    idx = np.arange(1, m + 1)
    for t in range(1, k + 1):
        tau = plan.taus[t - 1]
        decay = _pow_grid(idx, m, tau)
        coef = (1.0 - decay) / (idx / m)
        for i in idx:
            row = np.zeros(nv)
            row[k : k + i + 1] = coef[i - 1] / m
            row[t - 1] -= 1.0
            if t < k:
                row[t] += decay[i - 1]
            rows.append(row)
            rhs.append(0.0)
            row_names.append(f"dyn_t{t}_i{i}")
    norm = np.zeros(nv)
    norm[k:] = n * _pow_grid(np.arange(m + 1), m, n - 1) / m
    rows.append(norm.copy())
    rhs.append(1.0)
    row_names.append("norm_le")
    rows.append(-norm)
    rhs.append(-1.0)
    row_names.append("norm_ge")
    for l in range(1, m + 1):
        row = np.zeros(nv)
        row[k + l] = 1.0
        row[k + l - 1] = -1.0
        rows.append(row)
        rhs.append(0.0)
        row_names.append(f"mono_l{l}")
    c = np.zeros(nv)
    c[0] = 1.0
    return DiscretizedLP(
        orientation="minimize-D",
        n=n, k=k, m=m, taus=plan.taus,
        c=c, A=np.array(rows), b=np.array(rhs),
        var_names=var_names, row_names=tuple(row_names),
    )


def build_P(n: int, k: int, m: int, plan: WindowPlan | None = None) -> DiscretizedLP:
    """Assemble the maximization LP on the m-point grid (dual orientation).

    Variables alpha_{t,i} (i = 1..m), v, eta_0..eta_{m+1}; the boundary
    etas are pinned to zero by explicit rows so the variable count stays
    k*m + 1 + (m+2) as documented.
    """
    plan = plan or WindowPlan.default(n, k)
    if plan.n != n or plan.k != k:
        raise ValueError("plan does not match n, k")
    if m < k:
        raise ValueError("need m >= k grid points")
    _check_caps(k, m)
    na = k * m
    nv = na + 1 + (m + 2)  # alphas, v, eta_0..eta_{m+1}
    v_col = na
    eta0 = na + 1

    def a_col(t: int, i: int) -> int:
        return (t - 1) * m + (i - 1)

    var_names = tuple(f"alpha_{t}_{i}" for t in range(1, k + 1) for i in range(1, m + 1))
    var_names += ("v",) + tuple(f"eta_{l}" for l in range(m + 2))
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    row_names: list[str] = []
    idx = np.arange(1, m + 1)

    row = np.zeros(nv)
    row[a_col(1, 1) : a_col(1, m) + 1] = 1.0
    rows.append(row)
    rhs.append(1.0)
    row_names.append("mass_1")

    for t in range(1, k):
        decay = _pow_grid(idx, m, plan.taus[t - 1])
        row = np.zeros(nv)
        row[a_col(t + 1, 1) : a_col(t + 1, m) + 1] = 1.0
        row[a_col(t, 1) : a_col(t, m) + 1] = -decay
        rows.append(row)
        rhs.append(0.0)
        row_names.append(f"mass_{t + 1}")

    weights = {t: (1.0 - _pow_grid(idx, m, plan.taus[t - 1])) / (idx / m) / m
               for t in range(1, k + 1)}
    for l in range(0, m + 1):
        row = np.zeros(nv)
        row[v_col] = (n / m) * (math.exp((n - 1) * math.log1p(-l / m)) if l < m else 0.0)
        row[eta0 + l + 1] += 1.0
        row[eta0 + l] -= 1.0
        for t in range(1, k + 1):
            w = weights[t]
            start = max(l, 1)
            row[a_col(t, start) : a_col(t, m) + 1] -= w[start - 1 :]
        rows.append(row)
        rhs.append(0.0)
        row_names.append(f"value_l{l}")

    for col, name in ((eta0, "eta0_zero"), (eta0 + m + 1, "etaM_zero")):
        row = np.zeros(nv)
        row[col] = 1.0
        rows.append(row)
        rhs.append(0.0)
        row_names.append(name)

    c = np.zeros(nv)
    c[v_col] = 1.0
    return DiscretizedLP(
        orientation="maximize-P",
        n=n, k=k, m=m, taus=plan.taus,
        c=c, A=np.array(rows), b=np.array(rhs),
        var_names=var_names, row_names=tuple(row_names),
    )


_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-9


def _bland_pivot(tableau: np.ndarray, basis: np.ndarray, ncols: int) -> tuple[int, int] | None:
    """Bland's rule: smallest-index entering column, smallest-basis-index tie break.

    Returns (row, col) or None at optimality. Guaranteed to avoid cycling.
    """
    obj = tableau[-1, :ncols]
    enter = -1
    for j in range(ncols):
        if obj[j] < -_PIVOT_TOL:
            enter = j
            break
    if enter < 0:
        return None
    col = tableau[:-1, enter]
    rhs = tableau[:-1, -1]
    best_row = -1
    best_ratio = math.inf
    for i in range(len(col)):
        if col[i] > _PIVOT_TOL:
            ratio = rhs[i] / col[i]
            if ratio < best_ratio - 1e-12 or (
                abs(ratio - best_ratio) <= 1e-12
                and (best_row < 0 or basis[i] < basis[best_row])
            ):
                best_ratio = ratio
                best_row = i
    if best_row < 0:
        raise _Unbounded(enter)
    return best_row, enter


class _Unbounded(Exception):
    def __init__(self, col: int):
        self.col = col


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def solve(lp: DiscretizedLP, iteration_limit: int = 200_000) -> SimplexResult:
    """Two-phase dense tableau simplex with Bland's rule.

    On "optimal" the result reports feasibility and complementary
    slackness residuals (all should be <= 1e-7). Hitting the iteration
    limit returns the best bound found with status "iteration-limit".
    """
    minimize = lp.orientation == "minimize-D"
    c = lp.c if minimize else -lp.c
    A, b = lp.A.copy(), lp.b.copy()
    nrows, nvars = A.shape

    # flip rows with negative rhs so the slack basis is sign-consistent
    neg = b < 0
    A[neg] *= -1.0
    b = b.copy()
    b[neg] *= -1.0
    slack = np.where(neg, -1.0, 1.0)

    nslack = nrows
    art_rows = np.nonzero(neg)[0]
    nart = len(art_rows)
    ncols = nvars + nslack + nart
    tableau = np.zeros((nrows + 1, ncols + 1))
    tableau[:nrows, :nvars] = A
    tableau[:nrows, nvars : nvars + nslack] = np.diag(slack)
    for j, r in enumerate(art_rows):
        tableau[r, nvars + nslack + j] = 1.0
    tableau[:nrows, -1] = b
    basis = np.empty(nrows, dtype=int)
    basis[:] = nvars + np.arange(nrows)
    for j, r in enumerate(art_rows):
        basis[r] = nvars + nslack + j

    iterations = 0

    def run(ncols_active: int, limit: int) -> str:
        nonlocal iterations
        while True:
            if iterations >= limit:
                return "iteration-limit"
            try:
                piv = _bland_pivot(tableau, basis, ncols_active)
            except _Unbounded:
                return "unbounded"
            if piv is None:
                return "optimal"
            _pivot(tableau, basis, *piv)
            iterations += 1

    if nart:
        # phase 1: minimize the artificial sum
        tableau[-1, :] = 0.0
        tableau[-1, nvars + nslack : nvars + nslack + nart] = 1.0
        for j, r in enumerate(art_rows):
            tableau[-1] -= tableau[r]
        status = run(ncols, iteration_limit)
        if status != "optimal" or tableau[-1, -1] < -_FEAS_TOL:
            if status == "optimal":
                return SimplexResult("infeasible", math.nan, np.zeros(nvars), iterations,
                                     math.inf, math.inf, math.inf)
            return SimplexResult(status, math.nan, np.zeros(nvars), iterations,
                                 math.inf, math.inf, math.inf)
        # drive any leftover artificial out of the basis
        for i in range(nrows):
            if basis[i] >= nvars + nslack:
                pivot_col = next(
                    (j for j in range(nvars + nslack) if abs(tableau[i, j]) > _PIVOT_TOL),
                    None,
                )
                if pivot_col is not None:
                    _pivot(tableau, basis, i, pivot_col)
        tableau[:, nvars + nslack : nvars + nslack + nart] = 0.0

    # phase 2
    tableau[-1, :] = 0.0
    tableau[-1, :nvars] = c
    for i in range(nrows):
        if basis[i] < nvars:
            tableau[-1] -= c[basis[i]] * tableau[i]
    status = run(nvars + nslack, iteration_limit)
    if status == "unbounded":
        return SimplexResult("unbounded", math.nan, np.zeros(nvars), iterations,
                             math.inf, math.inf, math.inf)

    x = np.zeros(nvars + nslack + nart)
    x[basis] = tableau[:nrows, -1]
    xv = x[:nvars]
    obj = float(lp.c @ xv)

    primal_viol = float(np.max(np.append(lp.A @ xv - lp.b, 0.0)))
    primal_viol = max(primal_viol, float(np.max(np.append(-xv, 0.0))))
    # dual feasibility: reduced costs must be nonnegative at optimality
    dual_viol = float(max(0.0, -np.min(tableau[-1, : nvars + nslack])))
    # complementarity holds by construction for basic columns; report the
    # numerical defect actually realized in the objective row
    comp_gap = float(np.max(np.abs(tableau[-1, basis[basis < ncols]]))) if nrows else 0.0
    return SimplexResult(
        status=status,
        objective=obj,
        x=xv,
        iterations=iterations,
        max_primal_violation=primal_viol,
        max_dual_violation=dual_viol,
        complementarity_gap=comp_gap,
    )


def to_lp_text(lp: DiscretizedLP) -> str:
    """Industry-standard LP text layout (objective, rows, bounds) for external checks."""
    lines = [f"\\ {lp.orientation} n={lp.n} k={lp.k} m={lp.m}"]
    lines.append("Minimize" if lp.orientation == "minimize-D" else "Maximize")
    obj_terms = " + ".join(
        f"{float(lp.c[j])!r} {lp.var_names[j]}" for j in np.nonzero(lp.c)[0]
    )
    lines.append(f" obj: {obj_terms}")
    lines.append("Subject To")
    for i, (row, rhs) in enumerate(zip(lp.A, lp.b)):
        terms = []
        for j in np.nonzero(row)[0]:
            coef = float(row[j])
            sign = "-" if coef < 0 else "+"
            terms.append(f"{sign} {abs(coef)!r} {lp.var_names[j]}")
        label = lp.row_names[i] if lp.row_names else f"r{i}"
        body = " ".join(terms).lstrip("+ ")
        lines.append(f" {label}: {body} <= {float(rhs)!r}")
    lines.append("Bounds")
    for name in lp.var_names:
        lines.append(f" 0 <= {name}")
    lines.append("End")
    return "\n".join(lines)
