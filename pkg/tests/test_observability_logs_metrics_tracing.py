from __future__ import annotations

import json
from pathlib import Path

from core.config import load_config
from core.logger import StructuredLogger, get_logger
from core.metrics import MetricsRegistry
from core.tracing import new_run_id, run_dir


def test_run_id_and_run_dir_naming(tmp_path):
    run_id = new_run_id()
    assert len(run_id) == 32
    target = run_dir(tmp_path, run_id)
    assert target.parent == tmp_path
    stamp, prefix, short = target.name.split("_")
    assert stamp.endswith("Z")
    assert prefix == "run"
    assert short == run_id[:12]


def test_metrics_labels_and_snapshot():
    metrics = MetricsRegistry()
    metrics.inc("stage_runs_total", labels={"status": "completed", "stage": "flow"})
    metrics.inc("flow_step_halvings_total", 3)
    snap = metrics.snapshot()
    assert snap["stage_runs_total|stage=flow,status=completed"] == 1
    assert metrics.get("flow_step_halvings_total") == 3
    assert list(snap) == sorted(snap)


def test_structured_logger_emits_json(capsys):
    logger = StructuredLogger(component="test", context={"run_id": "r"}, log_file=None)
    logger.info("event_name", "message", x=1)
    logger.debug("hidden", "below threshold")
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    payload = json.loads(lines[0])
    assert payload["event"] == "event_name"
    assert payload["run_id"] == "r"
    assert payload["data"] == {"x": 1}


def test_logger_writes_file_when_configured(tmp_path, capsys):
    runtime = tmp_path / "runtime"
    config = load_config({"runtime_dir": runtime, "logs_dir": runtime / "logs", "log_level": "DEBUG"})
    logger = get_logger(config, component="flow", run_id="abc")
    logger.debug("step_halved", "Step halved", dt=1e-4)
    log_file = Path(config.logs_dir) / "inoue.log"
    assert '"event": "step_halved"' in log_file.read_text(encoding="utf-8")
    assert '"event": "step_halved"' in capsys.readouterr().out


def test_config_reads_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("INOUE_RUNTIME_DIR", str(tmp_path / "rt"))
    monkeypatch.setenv("INOUE_WORKERS", "3")
    monkeypatch.setenv("INOUE_MAX_STEP_HALVINGS", "5")
    config = load_config()
    assert config.workers == 3
    assert config.max_step_halvings == 5
    assert config.output_root == tmp_path / "rt" / "runs"
    assert config.runtime_dir.is_dir()
