from __future__ import annotations

from dataclasses import dataclass

from core.logger import StructuredLogger
from core.metrics import MetricsRegistry
from core.types import DiagnosticSeries, DiagnosticsReport, DiagnosticVerdict
from flow.runner import Trajectory

from .estimates import DIAGNOSTICS, all_series, profile_trajectory


@dataclass(frozen=True)
class DiagnosisResult:
    report: DiagnosticsReport
    series: list[DiagnosticSeries]


def summarize(verdicts: list[DiagnosticVerdict]) -> DiagnosticsReport:
    return DiagnosticsReport(
        total=len(verdicts),
        passed=sum(1 for v in verdicts if v.passed),
        failed=sum(1 for v in verdicts if not v.passed),
        verdicts=verdicts,
    )


def diagnose(
    trajectory: Trajectory,
    workers: int = 1,
    samples: int = 12,
    seed: int = 42,
    informational_calabi: bool = False,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
) -> DiagnosisResult:
    profile = profile_trajectory(trajectory, workers=workers, samples=samples, seed=seed)
    verdicts = []
    for name, diagnostic in DIAGNOSTICS.items():
        if name == "calabi_quantity":
            outcome = diagnostic(profile, informational=informational_calabi)
        else:
            outcome = diagnostic(profile)
        verdicts.append(outcome.verdict)
        if metrics is not None:
            metrics.inc("diagnostics_total", labels={"quantity": name, "passed": str(outcome.verdict.passed).lower()})
        if logger is not None:
            logger.info(
                "diagnostic_verdict",
                outcome.verdict.reason,
                quantity=name,
                passed=outcome.verdict.passed,
                informational=outcome.verdict.informational,
            )
    return DiagnosisResult(report=summarize(verdicts), series=all_series(profile))
