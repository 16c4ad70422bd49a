from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, field_validator, model_validator

from .tracing import utc_now_iso


class SurfaceKind(str, Enum):
    SM = "sm"
    SPLUS = "splus"


class SolverKind(str, Enum):
    REDUCED = "reduced"
    FULL = "full"


class StepScheme(str, Enum):
    MIDPOINT = "midpoint"
    RKC = "rkc"


class StageName(str, Enum):
    CONSTRUCT = "construct"
    VERIFY_TENSORS = "verify-tensors"
    FLOW = "flow"
    DIAGNOSE = "diagnose"
    GH = "gh"


class StageStatus(str, Enum):
    PENDING = "PENDING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"
    SKIPPED = "SKIPPED"


class RunStatus(str, Enum):
    RECEIVED = "RECEIVED"
    VALIDATED = "VALIDATED"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


class FailureType(str, Enum):
    CONSTRUCTION_ERROR = "construction_error"
    DOMAIN_ERROR = "domain_error"
    SINGULAR_METRIC = "singular_metric"
    BAD_KIND = "bad_kind"
    NOT_STRONGLY_FLAT = "not_strongly_flat"
    POSITIVITY_LOSS = "positivity_loss"
    STEP_FAILURE = "step_failure"
    INVALID_INITIAL_DATA = "invalid_initial_data"
    INSUFFICIENT_DATA = "insufficient_data"
    DISCONNECTED = "disconnected"
    SCHEMA_VIOLATION = "schema_violation"
    MISSING_SERIES = "missing_series"
    UNKNOWN = "unknown"


class FitModel(str, Enum):
    EXPONENTIAL = "exponential"
    LINEAR_EXPONENTIAL = "linear_exponential"
    HALF_GROWTH = "half_growth"
    CONSTANT = "constant"


class GraphSlice(str, Enum):
    FIBER = "fiber"
    BASE = "base"
    FULL = "full"


class Stencil(str, Enum):
    REDUCED = "reduced"
    AXIS = "axis"


class GHSource(str, Enum):
    FLOW = "flow"
    EXPLICIT = "explicit"


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class FlowSignal(BaseModel):
    failure_type: FailureType
    retryable: bool
    severity: Severity = Severity.MEDIUM
    message: str
    recommended_action: str
    diagnostics: dict[str, Any] = Field(default_factory=dict)


class IdentityCheck(BaseModel):
    name: str
    description: str
    samples: int
    max_deviation: float
    tolerance: float
    relative: bool = False
    passed: bool


class TensorReport(BaseModel):
    surface: str
    times: list[float] = Field(default_factory=list)
    checks: list[IdentityCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class RateFit(BaseModel):
    model: FitModel
    coefficient: float
    rate: float | None = None
    residual: float = 0.0
    points: int = 0
    window_start: float = 1.0


class DiagnosticSeries(BaseModel):
    label: str
    times: list[float]
    values: list[float]

    @model_validator(mode="after")
    def _check_series(self) -> "DiagnosticSeries":
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"series {self.label} has non-finite values")
        return self


class DiagnosticVerdict(BaseModel):
    quantity: str
    passed: bool
    informational: bool = False
    reason: str
    fits: dict[str, RateFit] = Field(default_factory=dict)
    tolerances: dict[str, float] = Field(default_factory=dict)
    series: list[str] = Field(default_factory=list)


class DiagnosticsReport(BaseModel):
    total: int
    passed: int
    failed: int
    verdicts: list[DiagnosticVerdict]


class StepEvent(BaseModel):
    t: float
    dt_requested: float
    dt_used: float
    halvings: int = 0
    stages: int = 1
    spectral_radius: float = 0.0


class GHEstimate(BaseModel):
    t: float
    fiber_diameter: float
    projection_excess: float
    section_distance: float
    expansion_excess: float
    bound: float


class GHReport(BaseModel):
    source: str
    circle_length: float
    estimates: list[GHEstimate] = Field(default_factory=list)


class ArtifactRecord(BaseModel):
    path: str
    sha256: str
    bytes: int


class StageRecord(BaseModel):
    name: StageName
    status: StageStatus = StageStatus.PENDING
    started_at: str | None = None
    duration_s: float = 0.0
    artifacts: list[str] = Field(default_factory=list)
    verdicts: dict[str, bool] = Field(default_factory=dict)
    error: str | None = None
    failure_type: FailureType | None = None
    diagnostics: dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    run_id: str
    config_hash: str
    tool_version: str
    status: RunStatus = RunStatus.RECEIVED
    stages: list[StageRecord] = Field(default_factory=list)
    artifacts: list[ArtifactRecord] = Field(default_factory=list)
    verdicts: dict[str, bool] = Field(default_factory=dict)
    metrics_snapshot: dict[str, int] = Field(default_factory=dict)
    exit_code: int = 0
    started_at: str = Field(default_factory=utc_now_iso)
    finished_at: str | None = None

    @field_validator("artifacts")
    @classmethod
    def _sorted_artifacts(cls, value: list[ArtifactRecord]) -> list[ArtifactRecord]:
        return sorted(value, key=lambda a: a.path)


@dataclass
class RunContext:
    config: Any
    logger: Any
    metrics: Any
    run_config: Any
    out_dir: Path
    state: dict[str, Any] = field(default_factory=dict)
