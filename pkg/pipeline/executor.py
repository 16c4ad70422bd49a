from __future__ import annotations

import time
from pathlib import Path

from core.config import Config, load_config
from core.exceptions import InoueLabError, MissingSeries
from core.logger import StructuredLogger, get_logger
from core.metrics import MetricsRegistry
from core.tracing import new_run_id, run_dir, utc_now_iso
from core.types import (
    FailureType,
    RunContext,
    RunManifest,
    RunStatus,
    StageName,
    StageRecord,
    StageStatus,
)

from .export import TOOL_VERSION, ArtifactWriter
from .plot_data import emit_plot_data
from .run_config import RunConfig
from .stages import StageRegistry

MANIFEST_NAME = "manifest.json"


def resolve_out_dir(run_config: RunConfig, config: Config, run_id: str, out_dir: str | Path | None = None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    if run_config.output_dir:
        return Path(run_config.output_dir)
    return run_dir(config.output_root, run_id)


def _run_stage(
    record: StageRecord,
    registry: StageRegistry,
    ctx: RunContext,
    writer: ArtifactWriter,
    logger: StructuredLogger,
) -> None:
    spec = registry.get(record.name)
    record.started_at = utc_now_iso()
    logger.info("stage_start", f"Running stage {record.name.value}", stage=record.name.value)
    started = time.perf_counter()
    try:
        outcome = spec.handler(ctx, writer)
        record.status = StageStatus.COMPLETED
        record.artifacts = outcome.artifacts
        record.verdicts = outcome.verdicts
    except InoueLabError as exc:
        record.status = StageStatus.FAILED
        record.error = str(exc)
        record.failure_type = exc.failure_type
        record.diagnostics = exc.diagnostics
    except Exception as exc:  # pragma: no cover - unexpected failures still land in the manifest
        record.status = StageStatus.FAILED
        record.error = str(exc)
        record.failure_type = FailureType.UNKNOWN
    record.duration_s = round(time.perf_counter() - started, 6)
    if record.status is StageStatus.FAILED:
        logger.error(
            "stage_error",
            f"Stage {record.name.value} failed",
            stage=record.name.value,
            failure_type=record.failure_type.value if record.failure_type else None,
            error=record.error,
        )
    else:
        logger.info(
            "stage_done",
            f"Stage {record.name.value} completed",
            stage=record.name.value,
            duration_s=record.duration_s,
            verdicts=record.verdicts,
        )


def execute(
    run_config: RunConfig,
    config: Config | None = None,
    out_dir: str | Path | None = None,
    base_dir: str | Path | None = None,
    metrics: MetricsRegistry | None = None,
    registry: StageRegistry | None = None,
) -> tuple[RunManifest, Path]:
    """Run the configured stages in dependency order and write the manifest.

    A failing stage is recorded and dependent stages are skipped; independent
    stages still run. The exit code is nonzero iff a stage failed or a verdict failed.
    """
    config = config or load_config()
    metrics = metrics or MetricsRegistry()
    run_id = new_run_id()
    target = resolve_out_dir(run_config, config, run_id, out_dir)
    logger = get_logger(config, component="inoue", run_id=run_id)
    if registry is None:
        registry = StageRegistry()
        registry.register_defaults()

    manifest = RunManifest(
        run_id=run_id,
        config_hash=run_config.config_hash(),
        tool_version=TOOL_VERSION,
        status=RunStatus.VALIDATED,
        stages=[StageRecord(name=stage) for stage in run_config.pipeline],
    )
    writer = ArtifactWriter(target, logger=logger)
    logger.info("run_start", "Starting pipeline run", out_dir=str(target), stages=[s.value for s in run_config.pipeline])
    manifest.status = RunStatus.RUNNING

    records: dict[StageName, StageRecord] = {r.name: r for r in manifest.stages}
    try:
        surface = run_config.build_surface(Path(base_dir) if base_dir is not None else None)
    except InoueLabError as exc:
        for record in manifest.stages:
            record.status = StageStatus.FAILED
            record.error = str(exc)
            record.failure_type = exc.failure_type
        logger.error("construction_error", str(exc), **exc.diagnostics)
        surface = None

    if surface is not None:
        ctx = RunContext(
            config=config,
            logger=logger,
            metrics=metrics,
            run_config=run_config,
            out_dir=target,
            state={"surface": surface},
        )
        for record in manifest.stages:
            missing = [
                dep.value
                for dep in registry.get(record.name).requires(run_config)
                if dep not in records or records[dep].status is not StageStatus.COMPLETED
            ]
            if missing:
                record.status = StageStatus.SKIPPED
                record.error = f"requires completed stage(s): {', '.join(missing)}"
                logger.warning("stage_skipped", record.error, stage=record.name.value)
            else:
                _run_stage(record, registry, ctx, writer, logger)
            metrics.inc("stage_runs_total", labels={"stage": record.name.value, "status": record.status.value})

        if any(records[s].status is StageStatus.COMPLETED for s in (StageName.DIAGNOSE, StageName.GH) if s in records):
            try:
                emit_plot_data(target, writer)
            except MissingSeries as exc:
                logger.warning("plot_data_skipped", str(exc), **exc.diagnostics)

    for record in manifest.stages:
        for name, passed in record.verdicts.items():
            manifest.verdicts[name] = passed
            metrics.inc("verdicts_total", labels={"quantity": name, "passed": str(passed).lower()})

    failed_stage = any(r.status is StageStatus.FAILED for r in manifest.stages)
    failed_verdict = not all(manifest.verdicts.values())
    manifest.exit_code = 1 if failed_stage or failed_verdict else 0
    manifest.status = RunStatus.FAILED if failed_stage else RunStatus.COMPLETED
    manifest.artifacts = writer.inventory()
    manifest.metrics_snapshot = metrics.snapshot()
    manifest.finished_at = utc_now_iso()
    (target / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(
        "run_done",
        "Pipeline run finished",
        status=manifest.status.value,
        exit_code=manifest.exit_code,
        artifacts=len(manifest.artifacts),
    )
    return manifest, target
