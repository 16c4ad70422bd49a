from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from core.config import Config, load_config
from core.exceptions import SchemaViolation
from core.types import RunManifest
from pipeline.executor import execute
from pipeline.run_config import RunConfig, validate


def read_run_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    defaults: dict[str, Any] | None = None,
) -> RunConfig:
    """Load a run config file (or the defaults), apply top-level overrides and validate.

    ``defaults`` fill keys the file leaves out; ``overrides`` win over the file.
    """
    data: dict[str, Any] = {}
    base_dir: Path | None = None
    if config_path is not None:
        path = Path(config_path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path} is not valid JSON", [{"path": "$", "message": str(exc)}]) from exc
        base_dir = path.parent
    for key, value in (defaults or {}).items():
        data.setdefault(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return validate(data, base_dir=base_dir)


def run_pipeline(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    out_dir: str | Path | None = None,
    config_overrides: dict[str, Any] | None = None,
) -> tuple[RunManifest, Path]:
    config: Config = load_config(config_overrides)
    defaults = {"workers": config.workers, "seed": config.random_seed}
    run_config = read_run_config(config_path, overrides, defaults)
    base_dir = Path(config_path).parent if config_path is not None else None
    return execute(run_config, config=config, out_dir=out_dir, base_dir=base_dir)


def main() -> None:
    # Minimal direct entrypoint; richer UX via `python -m cli`.
    manifest, _ = run_pipeline(overrides={"pipeline": ["construct", "verify-tensors"]})
    print(manifest.model_dump_json(indent=2))


if __name__ == "__main__":
    main()
