from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, model_validator

from core.types import SurfaceKind

from .construct import (
    DEFAULT_SM_MATRIX,
    DEFAULT_SPLUS_MATRIX,
    SurfaceData,
    construct_sm,
    construct_splus,
)


class SurfaceSpec(BaseModel):
    """Surface description document: integer matrix rows, (p, q, r) and tau as [re, im]."""

    kind: SurfaceKind = SurfaceKind.SM
    matrix: list[list[int]] | None = None
    p: int = 0
    q: int = 0
    r: int = 1
    tau: list[float] | None = Field(default=None, min_length=2, max_length=2)

    @model_validator(mode="after")
    def _check_shape(self) -> "SurfaceSpec":
        if self.matrix is not None:
            size = 3 if self.kind is SurfaceKind.SM else 2
            if len(self.matrix) != size or any(len(row) != size for row in self.matrix):
                raise ValueError(f"matrix must be {size}x{size} for kind {self.kind.value}")
        return self

    def build(self) -> SurfaceData:
        if self.kind is SurfaceKind.SM:
            return construct_sm(self.matrix or DEFAULT_SM_MATRIX)
        tau = complex(self.tau[0], self.tau[1]) if self.tau else None
        return construct_splus(self.matrix or DEFAULT_SPLUS_MATRIX, self.p, self.q, self.r, tau)


def load_surface_spec(path: str | Path) -> SurfaceSpec:
    data: Any = json.loads(Path(path).read_text(encoding="utf-8"))
    return SurfaceSpec.model_validate(data)

