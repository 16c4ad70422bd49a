from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel

from core.logger import StructuredLogger
from core.types import ArtifactRecord, DiagnosticSeries

TOOL_VERSION = "0.1.0"


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, "dtype") and value.dtype.kind == "f":
        return format_float(float(value))
    return str(value)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class ArtifactWriter:
    """Writes run outputs under ``out_dir`` and keeps a checksum inventory."""

    def __init__(self, out_dir: Path, logger: StructuredLogger | None = None) -> None:
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logger
        self.records: dict[str, ArtifactRecord] = {}

    def _record(self, path: Path) -> str:
        rel = path.relative_to(self.out_dir).as_posix()
        record = ArtifactRecord(path=rel, sha256=sha256_file(path), bytes=path.stat().st_size)
        self.records[rel] = record
        if self.logger is not None:
            self.logger.debug("artifact_written", "Artifact written", path=rel, sha256=record.sha256)
        return rel

    def write_csv(self, rel_path: str, header: list[str], rows: Iterable[Iterable[Any]]) -> str:
        path = self.out_dir / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        return self._record(path)

    def write_json(self, rel_path: str, payload: BaseModel | dict[str, Any]) -> str:
        path = self.out_dir / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        return self._record(path)

    def register(self, rel_path: str) -> str:
        return self._record(self.out_dir / rel_path)

    def inventory(self) -> list[ArtifactRecord]:
        return [self.records[k] for k in sorted(self.records)]


def write_series(writer: ArtifactWriter, series: DiagnosticSeries) -> str:
    return writer.write_csv(f"series/{series.label}.csv", ["t", "value"], zip(series.times, series.values))


def read_series(path: Path) -> DiagnosticSeries:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    return DiagnosticSeries(
        label=Path(path).stem,
        times=[float(r["t"]) for r in rows],
        values=[float(r["value"]) for r in rows],
    )


def load_series_dir(out_dir: Path) -> dict[str, DiagnosticSeries]:
    folder = Path(out_dir) / "series"
    if not folder.is_dir():
        return {}
    return {p.stem: read_series(p) for p in sorted(folder.glob("*.csv"))}
