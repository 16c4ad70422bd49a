from __future__ import annotations

import os
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import BaseModel


def _parse_bool(value: str | None, default: bool) -> bool:
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def _parse_int(value: str | None, default: int) -> int:
    if value is None or value == "":
        return default
    return int(value)


def _parse_float(value: str | None, default: float) -> float:
    if value is None or value == "":
        return default
    return float(value)


_PATH_KEYS = {"runtime_dir", "logs_dir", "output_root"}


class Config(BaseModel):
    app_name: str = "INOUE"
    env: str = "dev"
    log_level: str = "INFO"
    log_to_file: bool = True

    runtime_dir: Path = Path("runtime")
    logs_dir: Path = Path("runtime/logs")
    output_root: Path = Path("runtime/runs")

    workers: int = 1
    random_seed: int = 42

    diff_step: float = 1e-3
    reduction_cap: int = 64
    max_step_halvings: int = 8
    max_rkc_stages: int = 600

    @classmethod
    def from_env(cls, overrides: dict[str, Any] | None = None) -> "Config":
        load_dotenv(override=False)
        runtime_dir = Path(os.getenv("INOUE_RUNTIME_DIR", "runtime"))
        data = {
            "app_name": os.getenv("INOUE_APP_NAME", "INOUE"),
            "env": os.getenv("INOUE_ENV", "dev"),
            "log_level": os.getenv("INOUE_LOG_LEVEL", "INFO"),
            "log_to_file": _parse_bool(os.getenv("INOUE_LOG_TO_FILE"), True),
            "runtime_dir": runtime_dir,
            "logs_dir": runtime_dir / "logs",
            "output_root": Path(os.getenv("INOUE_OUTPUT_ROOT", str(runtime_dir / "runs"))),
            "workers": _parse_int(os.getenv("INOUE_WORKERS"), 1),
            "random_seed": _parse_int(os.getenv("INOUE_RANDOM_SEED"), 42),
            "diff_step": _parse_float(os.getenv("INOUE_DIFF_STEP"), 1e-3),
            "reduction_cap": _parse_int(os.getenv("INOUE_REDUCTION_CAP"), 64),
            "max_step_halvings": _parse_int(os.getenv("INOUE_MAX_STEP_HALVINGS"), 8),
            "max_rkc_stages": _parse_int(os.getenv("INOUE_MAX_RKC_STAGES"), 600),
        }
        if overrides:
            for key, value in overrides.items():
                if key in _PATH_KEYS:
                    data[key] = Path(value)
                else:
                    data[key] = value
        cfg = cls(**data)
        cfg.ensure_runtime_dirs()
        return cfg

    def ensure_runtime_dirs(self) -> None:
        self.runtime_dir.mkdir(parents=True, exist_ok=True)
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self.output_root.mkdir(parents=True, exist_ok=True)


def load_config(overrides: dict[str, Any] | None = None) -> Config:
    return Config.from_env(overrides)
