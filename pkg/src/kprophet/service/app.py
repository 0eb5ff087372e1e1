"""FastAPI service wrapping the solvers and the simulator.

Endpoints mirror the CLI surface: POST /bounds, POST /simulate,
POST /verify, GET /health. All responses embed a run manifest; seeded
requests are deterministic (identical request, identical response body).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import infinite_model, policy_sim
from ..distributions import ParameterError, builtin
from ..finite_model import WindowPlan, gamma_n_1, solve_v_finite
from ..reporting import TOOL_VERSION, RunManifest
from ..verify_suites import run_suite
from .schemas import (
    BoundsRequest,
    BoundsResponse,
    BoundsRow,
    HealthResponse,
    Manifest,
    SimulateRequest,
    SimulateResponse,
    VerifyCheck,
    VerifyRequest,
    VerifyResponse,
)


def _manifest(command: str, req_model, seed: int | None = None) -> Manifest:
    params = req_model.model_dump(exclude={"stamp"}, exclude_none=True)
    m = RunManifest.create(command, params, seed=seed, stamp=req_model.stamp)
    return Manifest(**m.to_dict())


def _bounds_rows(req: BoundsRequest) -> list[BoundsRow]:
    rows: list[BoundsRow] = []
    for k in range(req.k_min, req.k_max + 1):
        try:
            if req.theta_sweep is not None:
                theta_star, best = infinite_model.optimize_theta(req.theta_sweep, req.delta)
                rows.append(BoundsRow(k=k, v=best.v, theta_star=theta_star, y1=best.y1,
                                      residuals=list(best.residuals)))
            elif req.model == "infinite":
                bp = infinite_model.solve_v_infinity(k, req.delta)
                rows.append(BoundsRow(k=k, v=bp.v, y=list(bp.y[1:-1]),
                                      residuals=list(bp.residuals)))
            else:
                schedule = solve_v_finite(WindowPlan.default(req.n, k), min(req.delta, 1e-9))
                rows.append(BoundsRow(
                    k=k, n=req.n, v=schedule.v, eps=list(schedule.eps),
                    gamma=gamma_n_1(req.n) if k == 1 else None,
                ))
        except (ValueError, RuntimeError) as exc:
            rows.append(BoundsRow(k=k, error=str(exc)))
    return rows


def create_app() -> FastAPI:
    app = FastAPI(
        title="kprophet",
        version=TOOL_VERSION,
        description="Certified k-window threshold policies for i.i.d. value streams.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", tool_version=TOOL_VERSION)

    @app.post("/bounds", response_model=BoundsResponse)
    def bounds(req: BoundsRequest) -> BoundsResponse:
        rows = _bounds_rows(req)
        return BoundsResponse(rows=rows, manifest=_manifest("bounds", req))

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            dist = builtin(req.dist.name, **req.dist.params)
        except ParameterError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        seed = req.seed if req.seed is not None else 0
        mode = req.schedule_mode
        try:
            if mode == "single":
                schedule = policy_sim.schedule_single_threshold(req.n)
            elif mode == "two-threshold":
                schedule = policy_sim.schedule_two_threshold_exact(req.n)
            elif mode == "infinite":
                schedule = policy_sim.schedule_from_infinite(req.k, req.n, "sample-density")
            else:
                schedule = policy_sim.schedule_from_infinite(req.k, req.n, "deterministic-midpoint")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        report = policy_sim.simulate(schedule, dist, req.trials, seed)
        meets = report.ratio >= report.guarantee - 3.0 * report.stderr
        return SimulateResponse(
            **report.to_dict(),
            meets_guarantee=meets,
            manifest=_manifest("simulate", req, seed=seed),
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> VerifyResponse:
        try:
            report = run_suite(req.suite, n=req.n, k=req.k,
                               ks=tuple(req.ks) if req.ks else None)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return VerifyResponse(
            suite=report.suite,
            passed=report.passed,
            checks=[VerifyCheck(**c.to_dict()) for c in report.checks],
            manifest=_manifest("verify", req),
        )

    return app


app = create_app()
