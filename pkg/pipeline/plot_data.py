from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from core.exceptions import MissingSeries
from core.types import DiagnosticVerdict, RateFit
from diagnostics.fitting import evaluate_fit

from .export import ArtifactWriter, format_float, load_series_dir
from .rejudge import load_saved_report

# series label -> (diagnostic, fit key)
SERIES_FITS = {
    "sup_phi": ("potential_decay", "full"),
    "trace_gap_tilde": ("trace_gaps", "trace_gap_tilde"),
    "trace_gap_omega": ("trace_gaps", "trace_gap_omega"),
    "r_max": ("scalar_curvature_bounds", "upper"),
    "calabi": ("calabi_quantity", "bound"),
    "sup_u": ("u_quantity", "u"),
    "sup_grad_u": ("u_quantity", "grad_u"),
    "sup_phidot": ("phidot_bounds", "two_sided"),
    "phidot_upper": ("phidot_bounds", "sigma"),
    "phidot_lower": ("phidot_bounds", "eta"),
    "volume_ratio_max": ("volume_ratio", "max"),
}
GH_COLUMNS = ("fiber_diameter", "distortion", "gh_bound")


def _fit_lookup(out_dir: Path) -> dict[str, RateFit]:
    report = load_saved_report(out_dir)
    if report is None:
        return {}
    by_name: dict[str, DiagnosticVerdict] = {v.quantity: v for v in report.verdicts}
    fits = {}
    for label, (quantity, key) in SERIES_FITS.items():
        verdict = by_name.get(quantity)
        if verdict is not None and key in verdict.fits:
            fits[label] = verdict.fits[key]
    return fits


def _gh_rows(out_dir: Path) -> list[tuple[str, float, float, str]]:
    path = out_dir / "gh.csv"
    if not path.is_file():
        return []
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    out = []
    for column in GH_COLUMNS:
        for row in rows:
            out.append((column, float(row["t"]), float(row[column]), ""))
    return out


def emit_plot_data(out_dir: str | Path, writer: ArtifactWriter | None = None) -> str:
    """Tidy long-format table (quantity, t, value, fit_value) of every saved series and the gh table."""
    out_dir = Path(out_dir)
    series = load_series_dir(out_dir)
    gh_rows = _gh_rows(out_dir)
    if not series and not gh_rows:
        raise MissingSeries("no series or gh table to emit", {"out_dir": str(out_dir)})
    fits = _fit_lookup(out_dir)
    rows: list[tuple[str, float, float, str]] = []
    for label, s in series.items():
        fit = fits.get(label)
        fitted = evaluate_fit(fit, np.asarray(s.times)) if fit is not None else None
        for i, (t, v) in enumerate(zip(s.times, s.values)):
            rows.append((label, t, v, format_float(fitted[i]) if fitted is not None else ""))
    rows.extend(gh_rows)
    writer = writer or ArtifactWriter(out_dir)
    return writer.write_csv("plot_data.csv", ["quantity", "t", "value", "fit_value"], rows)
