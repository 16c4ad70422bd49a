from __future__ import annotations

import json
import math
from io import StringIO

from rich.console import Console
from typer.testing import CliRunner

from cli.app import app
from cli.formatters import format_number
from cli.render import render_diagnostics, render_gh_report, render_manifest, render_tensor_report, render_violations
from core.types import (
    DiagnosticSeries,
    DiagnosticsReport,
    DiagnosticVerdict,
    FitModel,
    GHEstimate,
    GHReport,
    IdentityCheck,
    RateFit,
    RunManifest,
    RunStatus,
    StageName,
    StageRecord,
    StageStatus,
    TensorReport,
)
from pipeline.export import ArtifactWriter, write_series

runner = CliRunner()


def _console() -> tuple[Console, StringIO]:
    sio = StringIO()
    return Console(file=sio, force_terminal=False, width=120, color_system=None), sio


def test_manifest_render_contains_stages_and_status():
    manifest = RunManifest(
        run_id="r",
        config_hash="0" * 64,
        tool_version="0.1.0",
        status=RunStatus.COMPLETED,
        stages=[
            StageRecord(name=StageName.CONSTRUCT, status=StageStatus.COMPLETED),
            StageRecord(name=StageName.DIAGNOSE, status=StageStatus.SKIPPED, error="requires completed stage(s): flow"),
        ],
        verdicts={"potential_decay": True, "gh_monotone": False},
        exit_code=1,
    )
    console, sio = _console()
    render_manifest(manifest, console=console)
    out = sio.getvalue()
    assert "Stages" in out
    assert "requires completed stage(s): flow" in out
    assert "Verdicts" in out
    assert "FAIL" in out
    assert "exit_code=1" in out


def test_report_renders():
    console, sio = _console()
    render_tensor_report(
        TensorReport(
            surface="sm",
            checks=[IdentityCheck(name="ricci_tricerri", description="", samples=4, max_deviation=1e-9, tolerance=1e-6, passed=True)],
        ),
        console=console,
    )
    fit = RateFit(model=FitModel.EXPONENTIAL, coefficient=0.5, rate=1.0)
    render_diagnostics(
        DiagnosticsReport(
            total=1,
            passed=1,
            failed=0,
            verdicts=[DiagnosticVerdict(quantity="trace_gaps", passed=True, reason="ok", fits={"tilde": fit})],
        ),
        console=console,
    )
    render_gh_report(
        GHReport(
            source="explicit",
            circle_length=0.2,
            estimates=[GHEstimate(t=0, fiber_diameter=1, projection_excess=0, section_distance=0.5, expansion_excess=0.1, bound=0.5)],
        ),
        console=console,
    )
    render_violations([{"path": "flow.dt", "message": "must be positive"}], console=console)
    out = sio.getvalue()
    assert "Tensor identities (sm)" in out
    assert "ricci_tricerri" in out
    assert "rate=1" in out
    assert "Passed 1/1" in out
    assert "Collapse to the circle" in out
    assert "flow.dt" in out


def test_format_number():
    assert format_number(None) == "-"
    assert format_number(0.000123456) == "0.0001235"


def test_list_stages_command():
    result = runner.invoke(app, ["list-stages"])
    assert result.exit_code == 0
    for stage in StageName:
        assert f"- {stage.value}:" in result.output


def test_construct_command_writes_manifest(tmp_path, monkeypatch):
    monkeypatch.setenv("INOUE_RUNTIME_DIR", str(tmp_path / "runtime"))
    monkeypatch.setenv("INOUE_LOG_TO_FILE", "false")
    out = tmp_path / "out"
    result = runner.invoke(app, ["construct", "--out", str(out)])
    assert result.exit_code == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["exit_code"] == 0
    assert "Run Status" in result.output


def test_bad_config_exits_with_violations(tmp_path, monkeypatch):
    monkeypatch.setenv("INOUE_RUNTIME_DIR", str(tmp_path / "runtime"))
    monkeypatch.setenv("INOUE_LOG_TO_FILE", "false")
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"flow": {"dt": 0}}), encoding="utf-8")
    result = runner.invoke(app, ["run", "--config", str(path)])
    assert result.exit_code == 2
    assert "Config violations" in result.output


def test_plot_data_on_empty_directory_fails(tmp_path):
    result = runner.invoke(app, ["plot-data", str(tmp_path)])
    assert result.exit_code == 1
    assert "missing_series" in result.output


def test_judge_command_rejudges_saved_series(tmp_path):
    times = [0.5 * k for k in range(9)]
    series = DiagnosticSeries(label="sup_phi", times=times, values=[0.3 * (1 + t) * math.exp(-t) for t in times])
    write_series(ArtifactWriter(tmp_path), series)
    result = runner.invoke(app, ["judge", str(tmp_path)])
    assert result.exit_code == 0
    assert "Passed 1/1" in result.output
    assert "No saved diagnostics.json" in result.output


def test_judge_command_on_empty_directory_fails(tmp_path):
    result = runner.invoke(app, ["judge", str(tmp_path)])
    assert result.exit_code == 1
    assert "missing_series" in result.output
