"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class DistSpec(BaseModel):
    """Serializable distribution descriptor: {name, params}."""

    name: Literal["uniform01", "exponential", "bounded-pareto"]
    params: dict[str, float] = Field(default_factory=dict)


class Manifest(BaseModel):
    command: str
    parameters: dict
    tool_version: str
    seed: Optional[int] = None
    timestamp: Optional[str] = None


class BoundsRequest(BaseModel):
    k_min: int = Field(ge=1)
    k_max: int = Field(ge=1)
    model: Literal["infinite", "finite"] = "infinite"
    n: Optional[int] = Field(default=None, ge=1, description="horizon, required for the finite model")
    theta_sweep: Optional[int] = Field(
        default=None, ge=2,
        description="grid resolution for the two-window sweep (infinite model, k = 2 only)",
    )
    delta: float = Field(default=1e-8, gt=0)
    stamp: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "BoundsRequest":
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        if self.model == "finite" and self.n is None:
            raise ValueError("the finite model needs a horizon n")
        if self.theta_sweep is not None and (self.model != "infinite" or (self.k_min, self.k_max) != (2, 2)):
            raise ValueError("theta_sweep applies to the infinite model with k = 2 only")
        return self


class BoundsRow(BaseModel):
    k: int
    v: Optional[float] = None
    y: list[float] = Field(default_factory=list, description="interior breakpoints")
    residuals: list[float] = Field(default_factory=list)
    gamma: Optional[float] = None
    n: Optional[int] = None
    eps: list[float] = Field(default_factory=list)
    theta_star: Optional[float] = None
    y1: Optional[float] = None
    error: Optional[str] = None


class BoundsResponse(BaseModel):
    rows: list[BoundsRow]
    manifest: Manifest


class SimulateRequest(BaseModel):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    dist: DistSpec
    trials: int = Field(ge=100)
    seed: Optional[int] = None
    schedule: Optional[Literal["single", "two-threshold", "infinite", "infinite-midpoint"]] = Field(
        default=None,
        description="defaults by k: 1 -> single, 2 -> two-threshold, else infinite",
    )
    stamp: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "SimulateRequest":
        mode = self.schedule or {1: "single", 2: "two-threshold"}.get(self.k, "infinite")
        if mode == "single" and self.k != 1:
            raise ValueError("single-threshold schedule requires k = 1")
        if mode == "two-threshold" and self.k != 2:
            raise ValueError("two-threshold schedule requires k = 2")
        if self.k > self.n:
            raise ValueError("need k <= n")
        return self

    @property
    def schedule_mode(self) -> str:
        return self.schedule or {1: "single", 2: "two-threshold"}.get(self.k, "infinite")


class SimulateResponse(BaseModel):
    policy_value_estimate: float
    prophet_value: float
    ratio: float
    stderr: float
    trials: int
    seed: int
    guarantee: float
    meets_guarantee: bool
    prophet_method: str
    distribution: dict
    schedule: dict
    manifest: Manifest


class VerifyRequest(BaseModel):
    suite: Literal["duality", "sandwich", "lp", "two-threshold", "beta-bar"]
    n: Optional[int] = Field(default=None, ge=2)
    k: Optional[int] = Field(default=None, ge=1)
    ks: Optional[list[int]] = None
    stamp: bool = False


class VerifyCheck(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    target: Optional[float] = None
    tolerance: Optional[float] = None
    note: str = ""


class VerifyResponse(BaseModel):
    suite: str
    passed: bool
    checks: list[VerifyCheck]
    manifest: Manifest


class HealthResponse(BaseModel):
    status: str
    tool_version: str
