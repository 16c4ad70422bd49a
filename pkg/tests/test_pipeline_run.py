from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from core.exceptions import MissingSeries, SchemaViolation, ZeroR
from core.types import DiagnosticSeries, FailureType, RunManifest, RunStatus, StageName, StageStatus, SurfaceKind
from main import run_pipeline
from pipeline.executor import MANIFEST_NAME, execute
from pipeline.export import ArtifactWriter, read_series, write_series
from pipeline.plot_data import emit_plot_data
from pipeline.run_config import RunConfig, load_run_config, validate
from surfaces.spec_file import SurfaceSpec

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_VERIFY = {"samples": 6, "times": [0, 1], "residual_samples": 3, "residual_times": [0, 1]}


def _stage(manifest: RunManifest, name: StageName):
    return next(r for r in manifest.stages if r.name is name)


def _rows(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def test_empty_config_validates_to_defaults():
    cfg = validate({})
    assert cfg.pipeline == [StageName.CONSTRUCT, StageName.VERIFY_TENSORS, StageName.FLOW, StageName.DIAGNOSE, StageName.GH]
    assert cfg.surface_spec().kind is SurfaceKind.SM
    assert validate("{}").config_hash() == cfg.config_hash()


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_validate(name):
    cfg = load_run_config(CONFIGS / name)
    assert cfg.pipeline


def test_every_violation_is_reported():
    with pytest.raises(SchemaViolation) as info:
        validate({"pipeline": ["diagnose", "gh"], "flow": {"dt": -1}})
    paths = [e["path"] for e in info.value.errors]
    assert "flow.dt" in paths
    assert paths.count("pipeline") == 2
    assert info.value.failure_type is FailureType.SCHEMA_VIOLATION


def test_semantic_checks():
    with pytest.raises(SchemaViolation) as info:
        validate({"flow": {"t_end": 2.0, "snapshot_every": 1.0}, "gh": {"times": [0.5]}})
    assert info.value.errors[0]["path"] == "gh.times.0"

    with pytest.raises(SchemaViolation) as info:
        validate({"surface": {"kind": "splus"}, "flow": {"solver": "full"}, "pipeline": ["construct", "flow"]})
    assert info.value.errors[0]["path"] == "flow.solver"

    with pytest.raises(SchemaViolation):
        validate("[1, 2")


def test_schema_and_semantic_errors_are_reported_together():
    with pytest.raises(SchemaViolation) as info:
        validate({"workers": 0, "flow": {"t_end": 2.0, "snapshot_every": 1.0}, "gh": {"times": [0.5]}})
    assert [e["path"] for e in info.value.errors] == ["workers", "gh.times.0"]

    with pytest.raises(SchemaViolation) as info:
        validate({"seed": "x", "surface": {"kind": "splus"}, "flow": {"solver": "full"}, "pipeline": ["construct", "flow"]})
    assert [e["path"] for e in info.value.errors] == ["seed", "flow.solver"]


def test_construction_errors_surface_at_validation():
    with pytest.raises(ZeroR):
        validate({"surface": {"kind": "splus", "r": 0}, "pipeline": ["construct"]})


def test_tensor_run_is_deterministic(tmp_path, test_config):
    cfg = validate({"pipeline": ["construct", "verify-tensors"], "verify_tensors": SMALL_VERIFY})
    first, first_dir = execute(cfg, config=test_config, out_dir=tmp_path / "a")
    second, _ = execute(cfg, config=test_config, out_dir=tmp_path / "b")

    assert first.exit_code == 0
    assert first.status is RunStatus.COMPLETED
    assert first.verdicts == {"tensor_identities": True}
    assert [a.path for a in first.artifacts] == ["surface.json", "tensor_report.json"]
    assert [a.sha256 for a in first.artifacts] == [a.sha256 for a in second.artifacts]
    assert first.run_id != second.run_id

    saved = RunManifest.model_validate_json((first_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    assert saved.config_hash == first.config_hash
    record = json.loads((first_dir / "surface.json").read_text(encoding="utf-8"))
    assert record["kind"] == "sm"


def test_unmet_dependency_is_skipped(tmp_path, test_config):
    cfg = RunConfig(pipeline=[StageName.CONSTRUCT, StageName.DIAGNOSE])
    manifest, _ = execute(cfg, config=test_config, out_dir=tmp_path)
    assert _stage(manifest, StageName.CONSTRUCT).status is StageStatus.COMPLETED
    skipped = _stage(manifest, StageName.DIAGNOSE)
    assert skipped.status is StageStatus.SKIPPED
    assert "flow" in skipped.error


def test_failed_flow_skips_dependents(tmp_path, test_config):
    cfg = validate(
        {
            "pipeline": ["construct", "flow", "diagnose"],
            "flow": {"n": 16, "t_end": 1.0, "dt": 0.01, "initial_data": "u"},
        }
    )
    manifest, _ = execute(cfg, config=test_config, out_dir=tmp_path)
    flow = _stage(manifest, StageName.FLOW)
    assert flow.status is StageStatus.FAILED
    assert flow.failure_type is FailureType.INVALID_INITIAL_DATA
    assert _stage(manifest, StageName.DIAGNOSE).status is StageStatus.SKIPPED
    assert _stage(manifest, StageName.CONSTRUCT).status is StageStatus.COMPLETED
    assert manifest.exit_code == 1
    assert manifest.status is RunStatus.FAILED


def test_construction_failure_is_recorded(tmp_path, test_config):
    cfg = RunConfig(surface=SurfaceSpec(kind=SurfaceKind.SPLUS, r=0), pipeline=[StageName.CONSTRUCT])
    manifest, out_dir = execute(cfg, config=test_config, out_dir=tmp_path)
    record = _stage(manifest, StageName.CONSTRUCT)
    assert record.failure_type is FailureType.CONSTRUCTION_ERROR
    assert manifest.exit_code == 1
    assert (out_dir / MANIFEST_NAME).is_file()


def test_explicit_collapse_run(tmp_path, test_config, metrics):
    cfg = validate(
        {
            "pipeline": ["construct", "gh"],
            "gh": {
                "source": "explicit",
                "times": [4.0, 0.0],
                "resolution": {"n": 3, "n_u": 4, "stencil": "axis"},
                "graphml": True,
            },
        }
    )
    manifest, out_dir = execute(cfg, config=test_config, out_dir=tmp_path, metrics=metrics)
    assert _stage(manifest, StageName.GH).status is StageStatus.COMPLETED
    assert "gh_monotone" in manifest.verdicts
    paths = {a.path for a in manifest.artifacts}
    assert {"gh.csv", "gh_report.json", "graph_t0.graphml", "graph_t4.graphml", "plot_data.csv"} <= paths
    gh_rows = _rows(out_dir / "gh.csv")
    assert [float(r["t"]) for r in gh_rows] == [0.0, 4.0]
    quantities = {r["quantity"] for r in _rows(out_dir / "plot_data.csv")}
    assert quantities == {"fiber_diameter", "distortion", "gh_bound"}
    assert metrics.get("dijkstra_sources_total") > 0


def test_flow_diagnose_and_collapse_run(tmp_path, test_config):
    cfg = validate(
        {
            "pipeline": ["construct", "flow", "diagnose", "gh"],
            "flow": {
                "n": 32,
                "t_end": 4.0,
                "dt": 0.002,
                "snapshot_every": 0.5,
                "initial_data": "0.002 * sin(2 * pi * u / L)",
            },
            "diagnose": {"calabi_samples": 4},
            "gh": {"times": [0.0, 4.0], "resolution": {"n": 3, "n_u": 4, "stencil": "axis"}},
        }
    )
    manifest, out_dir = execute(cfg, config=test_config, out_dir=tmp_path)
    assert all(r.status is StageStatus.COMPLETED for r in manifest.stages)
    assert len(list((out_dir / "flow").glob("snapshot_*.csv"))) == 9
    assert (out_dir / "series" / "sup_phi.csv").is_file()
    assert manifest.verdicts["evolution_identity"]
    assert manifest.verdicts["volume_ratio"]
    sup_phi = [r for r in _rows(out_dir / "plot_data.csv") if r["quantity"] == "sup_phi"]
    assert len(sup_phi) == 9
    assert all(r["fit_value"] for r in sup_phi)


def test_series_round_trip_and_plot_data(tmp_path):
    writer = ArtifactWriter(tmp_path)
    series = DiagnosticSeries(label="sup_phi", times=[0.0, 0.5], values=[0.1, 1.0 / 3.0])
    write_series(writer, series)
    assert read_series(tmp_path / "series" / "sup_phi.csv") == series

    emit_plot_data(tmp_path, writer)
    rows = _rows(tmp_path / "plot_data.csv")
    assert [r["quantity"] for r in rows] == ["sup_phi", "sup_phi"]
    assert all(r["fit_value"] == "" for r in rows)
    assert set(writer.records) == {"series/sup_phi.csv", "plot_data.csv"}


def test_plot_data_without_series_raises(tmp_path):
    with pytest.raises(MissingSeries):
        emit_plot_data(tmp_path)


def test_run_pipeline_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"pipeline": ["construct"]}), encoding="utf-8")
    runtime = tmp_path / "runtime"
    manifest, out_dir = run_pipeline(
        path,
        overrides={"seed": 11},
        out_dir=tmp_path / "out",
        config_overrides={"runtime_dir": runtime, "logs_dir": runtime / "logs", "output_root": runtime / "runs", "log_to_file": False},
    )
    assert manifest.exit_code == 0
    assert out_dir == tmp_path / "out"
    assert (out_dir / "surface.json").is_file()
