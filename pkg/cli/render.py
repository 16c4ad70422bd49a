from __future__ import annotations

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from core.types import DiagnosticsReport, GHReport, RunManifest, TensorReport

from .formatters import format_number, pretty_json


def render_manifest(manifest: RunManifest, console: Console | None = None) -> None:
    console = console or Console()
    stages = Table(title="Stages")
    stages.add_column("Stage")
    stages.add_column("Status")
    stages.add_column("Seconds")
    stages.add_column("Details")
    for record in manifest.stages:
        details = record.error or ", ".join(f"{k}={'PASS' if v else 'FAIL'}" for k, v in record.verdicts.items()) or "ok"
        stages.add_row(record.name.value, record.status.value, f"{record.duration_s:.2f}", details)
    console.print(stages)

    if manifest.verdicts:
        verdicts = Table(title="Verdicts")
        verdicts.add_column("Quantity")
        verdicts.add_column("Result")
        for name, passed in manifest.verdicts.items():
            verdicts.add_row(name, "PASS" if passed else "FAIL")
        console.print(verdicts)

    console.print(
        Panel(
            f"status={manifest.status.value}\nexit_code={manifest.exit_code}\nartifacts={len(manifest.artifacts)}\nconfig_hash={manifest.config_hash[:16]}",
            title="Run Status",
        )
    )


def render_tensor_report(report: TensorReport, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title=f"Tensor identities ({report.surface})")
    table.add_column("Check")
    table.add_column("Max deviation")
    table.add_column("Tolerance")
    table.add_column("Pass")
    for check in report.checks:
        table.add_row(check.name, format_number(check.max_deviation), format_number(check.tolerance), "Y" if check.passed else "N")
    console.print(table)


def render_diagnostics(report: DiagnosticsReport, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title="Diagnostics")
    table.add_column("Quantity")
    table.add_column("Pass")
    table.add_column("Fits")
    table.add_column("Reason")
    for verdict in report.verdicts:
        fits = "; ".join(
            f"{key}: C={format_number(fit.coefficient)}" + (f" rate={format_number(fit.rate)}" if fit.rate is not None else "")
            for key, fit in verdict.fits.items()
        )
        mark = "info" if verdict.informational else ("Y" if verdict.passed else "N")
        table.add_row(verdict.quantity, mark, fits, verdict.reason)
    console.print(table)
    console.print(f"Passed {report.passed}/{report.total}")


def render_gh_report(report: GHReport, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title=f"Collapse to the circle (L = {format_number(report.circle_length)})")
    for column in ("t", "fiber diameter", "projection", "section", "expansion", "bound"):
        table.add_column(column)
    for e in report.estimates:
        table.add_row(
            f"{e.t:g}",
            format_number(e.fiber_diameter),
            format_number(e.projection_excess),
            format_number(e.section_distance),
            format_number(e.expansion_excess),
            format_number(e.bound),
        )
    console.print(table)


def render_violations(errors: list[dict[str, str]], console: Console | None = None) -> None:
    console = console or Console()
    console.print(Panel(pretty_json(errors), title="Config violations"))
