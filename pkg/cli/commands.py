from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console

from core.exceptions import InoueLabError, MissingSeries, SchemaViolation
from core.types import DiagnosticsReport, GHReport, GHSource, StageName, TensorReport
from main import run_pipeline
from pipeline.plot_data import emit_plot_data
from pipeline.rejudge import rejudge_run
from pipeline.stages import StageRegistry

from .render import render_diagnostics, render_gh_report, render_manifest, render_tensor_report, render_violations

CONFIG_HELP = "Path to a JSON run config"
OUT_HELP = "Output directory (defaults to INOUE_OUTPUT_ROOT/<timestamp>_run_<id>)"


def _render_outputs(out_dir: Path, console: Console) -> None:
    tensor = out_dir / "tensor_report.json"
    if tensor.is_file():
        render_tensor_report(TensorReport.model_validate_json(tensor.read_text(encoding="utf-8")), console)
    diagnostics = out_dir / "diagnostics.json"
    if diagnostics.is_file():
        render_diagnostics(DiagnosticsReport.model_validate_json(diagnostics.read_text(encoding="utf-8")), console)
    gh = out_dir / "gh_report.json"
    if gh.is_file():
        render_gh_report(GHReport.model_validate_json(gh.read_text(encoding="utf-8")), console)


def _gh_source(config: str) -> GHSource:
    if not config:
        return GHSource.FLOW
    try:
        data = json.loads(Path(config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return GHSource.FLOW
    return GHSource(data.get("gh", {}).get("source", GHSource.FLOW.value))


def register_commands(app: typer.Typer) -> None:
    console = Console()

    def execute_stages(config: str, out: str, workers: int | None, seed: int | None, stages: list[str] | None) -> None:
        overrides = {"pipeline": stages, "workers": workers, "seed": seed}
        try:
            manifest, out_dir = run_pipeline(config or None, overrides=overrides, out_dir=out or None)
        except SchemaViolation as exc:
            render_violations(exc.errors, console=console)
            raise typer.Exit(code=2)
        except InoueLabError as exc:
            console.print(f"[red]{exc.failure_type.value}[/red]: {exc}")
            raise typer.Exit(code=2)
        _render_outputs(out_dir, console)
        render_manifest(manifest, console=console)
        console.print(f"Outputs written to {out_dir}")
        if manifest.exit_code:
            raise typer.Exit(code=manifest.exit_code)

    @app.command()
    def construct(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
    ) -> None:
        """Construct the surface and write its record."""
        execute_stages(config, out, None, None, [StageName.CONSTRUCT.value])

    @app.command("verify-tensors")
    def verify_tensors(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
        workers: Optional[int] = typer.Option(None, help="Worker threads"),
        seed: Optional[int] = typer.Option(None, help="Sampling seed"),
    ) -> None:
        """Check the closed-form tensor identities."""
        execute_stages(config, out, workers, seed, [StageName.VERIFY_TENSORS.value])

    @app.command()
    def flow(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
        workers: Optional[int] = typer.Option(None, help="Worker threads"),
        seed: Optional[int] = typer.Option(None, help="Sampling seed"),
    ) -> None:
        """Integrate the flow and write snapshots."""
        execute_stages(config, out, workers, seed, [StageName.CONSTRUCT.value, StageName.FLOW.value])

    @app.command()
    def diagnose(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
        workers: Optional[int] = typer.Option(None, help="Worker threads"),
        seed: Optional[int] = typer.Option(None, help="Sampling seed"),
    ) -> None:
        """Integrate the flow and judge the monitored quantities."""
        stages = [StageName.CONSTRUCT, StageName.FLOW, StageName.DIAGNOSE]
        execute_stages(config, out, workers, seed, [s.value for s in stages])

    @app.command()
    def gh(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
        workers: Optional[int] = typer.Option(None, help="Worker threads"),
        seed: Optional[int] = typer.Option(None, help="Sampling seed"),
    ) -> None:
        """Estimate collapse to the circle (runs the flow first when the source is 'flow')."""
        stages = [StageName.CONSTRUCT]
        if _gh_source(config) is GHSource.FLOW:
            stages.append(StageName.FLOW)
        stages.append(StageName.GH)
        execute_stages(config, out, workers, seed, [s.value for s in stages])

    @app.command()
    def run(
        config: str = typer.Option("", help=CONFIG_HELP),
        out: str = typer.Option("", help=OUT_HELP),
        workers: Optional[int] = typer.Option(None, help="Worker threads"),
        seed: Optional[int] = typer.Option(None, help="Sampling seed"),
        stage: Optional[List[str]] = typer.Option(None, "--stage", help="Restrict to these stages (repeatable)"),
    ) -> None:
        """Run the configured pipeline."""
        execute_stages(config, out, workers, seed, stage or None)

    @app.command("plot-data")
    def plot_data(out: str = typer.Argument(..., help="Run output directory")) -> None:
        """Re-emit plot_data.csv from the series of a finished run."""
        try:
            path = emit_plot_data(out)
        except MissingSeries as exc:
            console.print(f"[red]{exc.failure_type.value}[/red]: {exc}")
            raise typer.Exit(code=1)
        console.print(f"Wrote {Path(out) / path}")

    @app.command()
    def judge(out: str = typer.Argument(..., help="Run output directory")) -> None:
        """Judge the saved series of a finished run again and compare with its diagnostics.json."""
        try:
            result = rejudge_run(out)
        except MissingSeries as exc:
            console.print(f"[red]{exc.failure_type.value}[/red]: {exc}")
            raise typer.Exit(code=1)
        render_diagnostics(result.report, console)
        if result.saved is None:
            console.print("No saved diagnostics.json to compare with")
        elif result.mismatches:
            console.print(f"[red]Verdicts differ from the saved run[/red]: {', '.join(result.mismatches)}")
            raise typer.Exit(code=1)
        else:
            console.print("Verdicts reproduce the saved run")
        if result.report.failed:
            raise typer.Exit(code=1)

    @app.command("list-stages")
    def list_stages() -> None:
        registry = StageRegistry()
        registry.register_defaults()
        for name, description in registry.catalog():
            console.print(f"- {name}: {description}")
