from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, field_validator

from core.exceptions import SchemaViolation
from core.types import GHSource, SolverKind, StageName, SurfaceKind
from collapse.graph import GraphResolution
from flow.runner import FlowSettings
from surfaces.construct import SurfaceData
from surfaces.spec_file import SurfaceSpec, load_surface_spec

STAGE_ORDER = [StageName.CONSTRUCT, StageName.VERIFY_TENSORS, StageName.FLOW, StageName.DIAGNOSE, StageName.GH]


class VerifySettings(BaseModel):
    samples: int = Field(default=100, ge=1)
    times: list[float] = Field(default_factory=lambda: [0.0, 1.0, 5.0])
    residual_samples: int = Field(default=50, ge=1)
    residual_times: list[float] = Field(default_factory=lambda: [0.0, 1.0, 3.0, 6.0])


class DiagnoseSettings(BaseModel):
    calabi_samples: int = Field(default=12, ge=1)
    informational_calabi: bool = False


class GHSettings(BaseModel):
    source: GHSource = GHSource.FLOW
    times: list[float] = Field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0])
    resolution: GraphResolution = Field(default_factory=GraphResolution)
    y2: float = Field(default=1.0, gt=0)
    graphml: bool = False
    monotone_slack: float = Field(default=0.05, ge=0)

    @field_validator("times")
    @classmethod
    def _sorted(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("at least one time is required")
        if any(t < 0 for t in value):
            raise ValueError("times must be nonnegative")
        return sorted(set(value))


class RunConfig(BaseModel):
    surface: SurfaceSpec | None = None
    surface_file: str | None = None
    pipeline: list[StageName] = Field(default_factory=lambda: list(STAGE_ORDER))
    verify_tensors: VerifySettings = Field(default_factory=VerifySettings)
    flow: FlowSettings = Field(default_factory=FlowSettings)
    diagnose: DiagnoseSettings = Field(default_factory=DiagnoseSettings)
    gh: GHSettings = Field(default_factory=GHSettings)
    output_dir: str | None = None
    seed: int = 42
    workers: int = Field(default=1, ge=1)

    @field_validator("pipeline")
    @classmethod
    def _canonical_order(cls, value: list[StageName]) -> list[StageName]:
        if not value:
            raise ValueError("pipeline must name at least one stage")
        return [stage for stage in STAGE_ORDER if stage in value]

    def surface_spec(self, base_dir: Path | None = None) -> SurfaceSpec:
        if self.surface_file:
            return load_surface_spec(_resolve(self.surface_file, base_dir))
        return self.surface or SurfaceSpec()

    def build_surface(self, base_dir: Path | None = None) -> SurfaceData:
        return self.surface_spec(base_dir).build()

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _resolve(path: str, base_dir: Path | None) -> Path:
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    return p


def _error_path(loc: tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "$"


def _dependency_errors(data: dict[str, Any], base_dir: Path | None) -> list[dict[str, str]]:
    errors: list[dict[str, str]] = []
    raw_pipeline = data.get("pipeline")
    stages = {str(s) for s in raw_pipeline} if isinstance(raw_pipeline, list) else {s.value for s in STAGE_ORDER}
    if StageName.DIAGNOSE.value in stages and StageName.FLOW.value not in stages:
        errors.append({"path": "pipeline", "message": "stage 'diagnose' requires stage 'flow'"})
    gh = data.get("gh") if isinstance(data.get("gh"), dict) else {}
    gh_source = gh.get("source", GHSource.FLOW.value)
    if StageName.GH.value in stages and gh_source == GHSource.FLOW.value and StageName.FLOW.value not in stages:
        errors.append({"path": "pipeline", "message": "stage 'gh' with source 'flow' requires stage 'flow'"})
    if data.get("surface") is not None and data.get("surface_file") is not None:
        errors.append({"path": "surface_file", "message": "give either 'surface' or 'surface_file', not both"})
    surface_file = data.get("surface_file")
    if isinstance(surface_file, str) and not _resolve(surface_file, base_dir).is_file():
        errors.append({"path": "surface_file", "message": f"file not found: {surface_file}"})
    return errors


def _partial(model: type[BaseModel], value: Any) -> Any:
    try:
        return model.model_validate({} if value is None else value)
    except ValidationError:
        return None


def _parsed_stages(data: dict[str, Any]) -> list[StageName]:
    raw = data.get("pipeline")
    if raw is None:
        return list(STAGE_ORDER)
    if not isinstance(raw, list):
        return []
    names = {str(s) for s in raw}
    return [stage for stage in STAGE_ORDER if stage.value in names]


def _parsed_surface(data: dict[str, Any], base_dir: Path | None) -> tuple[SurfaceSpec | None, list[dict[str, str]]]:
    surface_file = data.get("surface_file")
    if isinstance(surface_file, str):
        path = _resolve(surface_file, base_dir)
        if not path.is_file():
            return None, []
        try:
            return load_surface_spec(path), []
        except (OSError, ValueError, ValidationError) as exc:
            return None, [{"path": "surface_file", "message": str(exc)}]
    return _partial(SurfaceSpec, data.get("surface")), []


def _semantic_errors(data: dict[str, Any], base_dir: Path | None) -> list[dict[str, str]]:
    """Cross-field checks over every section that parsed on its own."""
    spec, errors = _parsed_surface(data, base_dir)
    flow: FlowSettings | None = _partial(FlowSettings, data.get("flow"))
    gh: GHSettings | None = _partial(GHSettings, data.get("gh"))
    if flow is not None and spec is not None and flow.solver is SolverKind.FULL and spec.kind is not SurfaceKind.SM:
        errors.append({"path": "flow.solver", "message": "the full grid solver supports S_M only"})
    if flow is not None and gh is not None and StageName.GH in _parsed_stages(data) and gh.source is GHSource.FLOW:
        snapshots = flow.resolved_snapshot_times()
        for i, t in enumerate(gh.times):
            if not any(abs(t - s) <= 1e-9 for s in snapshots):
                errors.append({"path": f"gh.times.{i}", "message": f"t={t:g} is not a flow snapshot time"})
    return errors


def validate(config: str | dict[str, Any], base_dir: str | Path | None = None) -> RunConfig:
    """Parse and check a run configuration, reporting every violation at once.

    Surface construction runs last so arithmetic errors (ZeroR, WrongSpectrum, ...)
    surface at validation time with their own type.
    """
    base = Path(base_dir) if base_dir is not None else None
    if isinstance(config, str):
        try:
            data = json.loads(config)
        except json.JSONDecodeError as exc:
            raise SchemaViolation("run config is not valid JSON", [{"path": "$", "message": str(exc)}]) from exc
    else:
        data = config
    if not isinstance(data, dict):
        raise SchemaViolation("run config must be a JSON object", [{"path": "$", "message": "expected an object"}])

    errors = _dependency_errors(data, base)
    cfg: RunConfig | None = None
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        errors = [{"path": _error_path(e["loc"]), "message": e["msg"]} for e in exc.errors()] + errors
    errors += _semantic_errors(data, base)
    if errors:
        raise SchemaViolation(f"run config has {len(errors)} violation(s)", errors)
    assert cfg is not None
    cfg.build_surface(base)
    return cfg


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return validate(path.read_text(encoding="utf-8"), base_dir=path.parent)
