"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

FamilyName = Literal["poisson", "gaussian-known", "gaussian", "exponential"]


class Event(BaseModel):
    t: float
    x: float


class BurstModel(BaseModel):
    start: float
    end: float
    theta1: list[float]

    @model_validator(mode="after")
    def _ordered(self):
        if not self.end > self.start:
            raise ValueError("burst interval must have positive length")
        return self


class DetectRequest(BaseModel):
    family: FamilyName
    sigma: float = Field(1.0, gt=0)
    null: dict[str, float]
    P: int = Field(..., ge=1)
    G: int = Field(..., ge=1)
    k: int = Field(1, ge=1)
    alpha: float | None = Field(None, gt=0, lt=1)
    level: float | None = Field(None, gt=0, lt=1)
    mc_count: int = Field(100_000, ge=1000)
    seed: int
    offset: float = Field(0.0, ge=0.0, lt=1.0)
    events: list[Event]

    @model_validator(mode="after")
    def _consistent(self):
        if self.G > self.P:
            raise ValueError("need G <= P")
        if (self.alpha is None) == (self.level is None):
            raise ValueError("give exactly one of alpha / level")
        return self


class WindowRow(BaseModel):
    kind: str
    i: int
    lam: float | None = Field(None, serialization_alias="lambda")
    xi: float | None
    bin_start: int
    bin_end: int
    skipped: bool


class DecisionReportModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: str
    verdict: str
    witness: list[int]
    lam: list[float | None] = Field(serialization_alias="lambda", validation_alias="lambda")
    xi: list[float | None]
    skipped: list[int]
    alpha: float
    c: float
    k: int
    G: int
    level_estimate: float | None = None
    level_se: float | None = None
    provenance: str | None = None
    clamped: int = 0
    simple_null: bool = False


class DetectResponse(BaseModel):
    standard: DecisionReportModel | None
    sliding: DecisionReportModel
    windows: list[WindowRow]
    counts: list[int]
    dropped: int
    P: int
    G: int
    k: int
    seed: int
    offset: float


class CalibrateRequest(BaseModel):
    procedure: Literal["standard", "sliding"]
    level: float = Field(..., gt=0, lt=1)
    k: int = Field(1, ge=1)
    r: int = Field(1, ge=1)
    N: int | None = Field(None, ge=1)
    counts: list[int] | None = None
    G: int | None = Field(None, ge=1)
    mc_count: int = Field(100_000, ge=1000)
    seed: int | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.procedure == "standard" and self.N is None:
            raise ValueError("standard calibration needs N")
        if self.procedure == "sliding":
            if self.counts is None or self.G is None:
                raise ValueError("sliding calibration needs counts and G")
            if self.seed is None:
                raise ValueError("sliding calibration needs a seed")
        return self


class CalibrateResponse(BaseModel):
    alpha: float
    c: float
    level: float
    k: int
    method: str
    achieved: float
    achieved_se: float
    trace: list[dict]


class ScenarioModel(BaseModel):
    """Scenario fields shared by simulate / validate / power requests."""

    family: FamilyName
    sigma: float = Field(1.0, gt=0)
    theta0: list[float]
    null: dict[str, float] = {}
    P: int = Field(..., ge=1)
    G: int = Field(1, ge=1)
    k: int = Field(1, ge=1)
    counts: int | list[int] = 200
    burst: BurstModel | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.G > self.P:
            raise ValueError("need G <= P")
        if isinstance(self.counts, list) and len(self.counts) != self.P:
            raise ValueError("per-bin counts must have length P")
        return self


class SimulateRequest(ScenarioModel):
    seed: int


class SimulateResponse(BaseModel):
    events: list[Event]
    counts: list[int]
    P: int
    seed: int


class ValidateRequest(ScenarioModel):
    replications: int = Field(2000, ge=10)
    profile: Literal["desk", "deep"] | None = None
    theorem: Literal["1", "2", "both"] = "both"
    seed: int
    threads: int = Field(0, ge=0)


class ValidateResponse(BaseModel):
    theorem2: dict | None
    theorem1: dict | None
    passed: bool
    seed: int
    replications: int
    ks_csv: str | None = None
    correlation_csv: str | None = None


class PowerRequest(ScenarioModel):
    offsets: list[float] = [0.0]
    alpha: float | None = Field(None, gt=0, lt=1)
    level: float | None = Field(None, gt=0, lt=1)
    replications: int = Field(2000, ge=10)
    mc_count: int = Field(100_000, ge=1000)
    seed: int
    threads: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _threshold(self):
        if (self.alpha is None) == (self.level is None):
            raise ValueError("give exactly one of alpha / level")
        if self.burst is None:
            raise ValueError("power comparison needs a burst")
        if any(not 0.0 <= o < 1.0 for o in self.offsets):
            raise ValueError("offsets must lie in [0, 1)")
        return self


class PowerResponse(BaseModel):
    rows: list[dict]
    alpha_equal: float
    alpha_standard: float
    alpha_sliding: float
    level: float | None
    seed: int
    replications: int
    csv: str
