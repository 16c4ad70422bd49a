from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from collapse.distances import collapse_report
from collapse.export import write_graphml
from collapse.graph import build_graph
from core.types import GHSource, GraphSlice, RunContext, StageName
from diagnostics.scoring import diagnose
from flow.reconstruct import reconstruct_metric
from flow.runner import Trajectory, run
from geometry.differentiation import default_differentiator
from geometry.fields import MetricField, disassemble
from geometry.verification import verify_tensors
from reference.forms import explicit_solution
from surfaces.construct import SMData, SPlusData, construct_sm, construct_splus

from .export import ArtifactWriter, write_series
from .rejudge import DIAGNOSTICS_NAME
from .run_config import RunConfig

SNAPSHOT_HEADER = [
    "node", "q1", "q2", "q3", "u", "x1", "y1", "x2", "y2",
    "phi", "phidot", "g11", "g22", "re_g12", "im_g12",
]  # fmt: skip
STEPS_HEADER = ["t", "dt_requested", "dt_used", "halvings", "stages", "spectral_radius"]
GH_HEADER = [
    "t", "fiber_diameter", "projection_excess", "section_distance",
    "expansion_excess", "distortion", "gh_bound",
]  # fmt: skip


@dataclass
class StageOutcome:
    artifacts: list[str] = field(default_factory=list)
    verdicts: dict[str, bool] = field(default_factory=dict)


StageHandler = Callable[[RunContext, ArtifactWriter], StageOutcome]


@dataclass
class StageSpec:
    name: StageName
    description: str
    handler: StageHandler
    requires: Callable[[RunConfig], list[StageName]] = lambda cfg: []


class StageRegistry:
    def __init__(self) -> None:
        self._stages: dict[StageName, StageSpec] = {}

    def register(self, spec: StageSpec) -> None:
        self._stages[spec.name] = spec

    def get(self, name: StageName) -> StageSpec:
        return self._stages[name]

    def catalog(self) -> list[tuple[str, str]]:
        return [(spec.name.value, spec.description) for spec in self._stages.values()]

    def register_defaults(self) -> None:
        self.register(StageSpec(StageName.CONSTRUCT, "Write the surface record", construct_stage))
        self.register(StageSpec(StageName.VERIFY_TENSORS, "Check closed-form tensor identities", verify_stage))
        self.register(StageSpec(StageName.FLOW, "Integrate the normalized Chern-Ricci flow", flow_stage))
        self.register(
            StageSpec(StageName.DIAGNOSE, "Fit and judge the monitored quantities", diagnose_stage, lambda cfg: [StageName.FLOW])
        )
        self.register(StageSpec(StageName.GH, "Estimate collapse to the circle", gh_stage, _gh_requires))


def _gh_requires(cfg: RunConfig) -> list[StageName]:
    return [StageName.FLOW] if cfg.gh.source is GHSource.FLOW else []


def construct_stage(ctx: RunContext, writer: ArtifactWriter) -> StageOutcome:
    surface = ctx.state["surface"]
    return StageOutcome(artifacts=[writer.write_json("surface.json", surface.to_record())])


def verify_stage(ctx: RunContext, writer: ArtifactWriter) -> StageOutcome:
    cfg: RunConfig = ctx.run_config
    surface = ctx.state["surface"]
    sm = surface if isinstance(surface, SMData) else construct_sm()
    splus = surface if isinstance(surface, SPlusData) else construct_splus()
    settings = cfg.verify_tensors
    report = verify_tensors(
        sm,
        splus,
        samples=settings.samples,
        times=tuple(settings.times),
        residual_samples=min(settings.residual_samples, settings.samples),
        residual_times=tuple(settings.residual_times),
        seed=cfg.seed,
        diff=default_differentiator(ctx.config.diff_step),
        progress=lambda part: ctx.logger.debug("verify_progress", f"Checking {part}", part=part),
    )
    for check in report.checks:
        if not check.passed:
            ctx.logger.warning("check_failed", check.description, check=check.name, deviation=check.max_deviation)
    path = writer.write_json("tensor_report.json", report)
    return StageOutcome(artifacts=[path], verdicts={"tensor_identities": report.passed})


def _snapshot_rows(trajectory: Trajectory, index: int):
    grid = trajectory.grid
    snap = trajectory.snapshots[index]
    comps = disassemble(grid.metric(snap.phi, snap.t))
    for node in range(grid.size):
        yield [node, *grid.chart[node], *grid.nodes[node], snap.phi[node], snap.phidot[node], *comps[node]]


def flow_stage(ctx: RunContext, writer: ArtifactWriter) -> StageOutcome:
    cfg: RunConfig = ctx.run_config
    trajectory = run(
        ctx.state["surface"],
        cfg.flow,
        logger=ctx.logger,
        metrics=ctx.metrics,
        max_halvings=ctx.config.max_step_halvings,
        max_stages=ctx.config.max_rkc_stages,
    )
    ctx.state["trajectory"] = trajectory
    artifacts = [
        writer.write_csv(f"flow/snapshot_{i:03d}.csv", SNAPSHOT_HEADER, _snapshot_rows(trajectory, i))
        for i in range(len(trajectory.snapshots))
    ]
    steps = ([e.t, e.dt_requested, e.dt_used, e.halvings, e.stages, e.spectral_radius] for e in trajectory.steps)
    artifacts.append(writer.write_csv("flow/steps.csv", STEPS_HEADER, steps))
    return StageOutcome(artifacts=artifacts)


def diagnose_stage(ctx: RunContext, writer: ArtifactWriter) -> StageOutcome:
    cfg: RunConfig = ctx.run_config
    result = diagnose(
        ctx.state["trajectory"],
        workers=cfg.workers,
        samples=cfg.diagnose.calabi_samples,
        seed=cfg.seed,
        informational_calabi=cfg.diagnose.informational_calabi,
        logger=ctx.logger,
        metrics=ctx.metrics,
    )
    artifacts = [write_series(writer, s) for s in result.series]
    artifacts.append(writer.write_json(DIAGNOSTICS_NAME, result.report))
    verdicts = {v.quantity: v.passed for v in result.report.verdicts}
    return StageOutcome(artifacts=artifacts, verdicts=verdicts)


def _collapse_fields(ctx: RunContext) -> list[tuple[float, MetricField]]:
    cfg: RunConfig = ctx.run_config
    surface = ctx.state["surface"]
    if cfg.gh.source is GHSource.EXPLICIT:
        m_slope = surface.m_slope if isinstance(surface, SPlusData) else 1.0
        return [(t, explicit_solution(surface.kind, t, m_slope)) for t in cfg.gh.times]
    trajectory: Trajectory = ctx.state["trajectory"]
    return [(t, reconstruct_metric(trajectory.grid, trajectory.snapshot_at(t))) for t in cfg.gh.times]


def gh_stage(ctx: RunContext, writer: ArtifactWriter) -> StageOutcome:
    cfg: RunConfig = ctx.run_config
    surface = ctx.state["surface"]
    fields = _collapse_fields(ctx)
    report = collapse_report(
        fields,
        surface,
        source=cfg.gh.source.value,
        resolution=cfg.gh.resolution,
        y2=cfg.gh.y2,
        workers=cfg.workers,
        seed=cfg.seed,
        logger=ctx.logger,
        metrics=ctx.metrics,
    )
    rows = (
        [
            e.t,
            e.fiber_diameter,
            e.projection_excess,
            e.section_distance,
            e.expansion_excess,
            max(e.projection_excess, e.section_distance),
            e.bound,
        ]
        for e in report.estimates
    )
    artifacts = [writer.write_csv("gh.csv", GH_HEADER, rows), writer.write_json("gh_report.json", report)]
    if cfg.gh.graphml:
        for t, field_t in fields:
            graph = build_graph(field_t, surface, cfg.gh.resolution, GraphSlice.FIBER, y2=cfg.gh.y2)
            rel = f"graph_t{t:g}.graphml"
            write_graphml(graph, writer.out_dir / rel)
            artifacts.append(writer.register(rel))
    bounds = np.array([e.bound for e in report.estimates])
    monotone = bool(np.all(bounds[1:] <= bounds[:-1] * (1.0 + cfg.gh.monotone_slack) + 1e-12))
    return StageOutcome(artifacts=artifacts, verdicts={"gh_monotone": monotone})
