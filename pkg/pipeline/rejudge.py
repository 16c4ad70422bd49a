from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from core.exceptions import MissingSeries
from core.types import DiagnosticsReport
from diagnostics.estimates import judge_series
from diagnostics.scoring import summarize

from .export import load_series_dir

DIAGNOSTICS_NAME = "diagnostics.json"


@dataclass(frozen=True)
class RejudgeResult:
    report: DiagnosticsReport
    saved: DiagnosticsReport | None
    mismatches: list[str] = field(default_factory=list)

    @property
    def reproduced(self) -> bool:
        return self.saved is not None and not self.mismatches


def load_saved_report(out_dir: Path) -> DiagnosticsReport | None:
    path = Path(out_dir) / DIAGNOSTICS_NAME
    if not path.is_file():
        return None
    return DiagnosticsReport.model_validate_json(path.read_text(encoding="utf-8"))


def _calabi_flag(saved: DiagnosticsReport | None) -> bool:
    if saved is None:
        return False
    return any(v.informational for v in saved.verdicts if v.quantity == "calabi_quantity")


def rejudge_run(out_dir: str | Path) -> RejudgeResult:
    """Judge the saved series of a finished run again and compare with its diagnostics.json."""
    out_dir = Path(out_dir)
    series = load_series_dir(out_dir)
    if not series:
        raise MissingSeries("no saved series to judge", {"out_dir": str(out_dir)})
    saved = load_saved_report(out_dir)
    report = summarize(judge_series(series, informational_calabi=_calabi_flag(saved)))
    mismatches: list[str] = []
    if saved is not None:
        before = {v.quantity: (v.passed, v.reason) for v in saved.verdicts}
        after = {v.quantity: (v.passed, v.reason) for v in report.verdicts}
        mismatches = sorted(q for q in before.keys() | after.keys() if before.get(q) != after.get(q))
    return RejudgeResult(report=report, saved=saved, mismatches=mismatches)
