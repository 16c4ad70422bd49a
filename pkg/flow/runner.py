from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from core.exceptions import InvalidInitialData, PositivityLoss
from core.logger import StructuredLogger
from core.metrics import MetricsRegistry
from core.types import SolverKind, StepEvent, StepScheme
from surfaces.construct import SurfaceData

from .expressions import parse_initial_data
from .grids import FlowGrid, ReducedGrid, build_grid
from .integrator import Integrator

_TIME_TOL = 1e-12


class FlowSettings(BaseModel):
    solver: SolverKind = SolverKind.REDUCED
    n: int = Field(default=256, ge=8)
    n_fiber: int = Field(default=12, ge=3)
    n_u: int = Field(default=12, ge=3)
    t_end: float = Field(default=8.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    snapshot_times: list[float] | None = None
    snapshot_every: float = Field(default=0.5, gt=0)
    initial_data: str = "0"
    leaf_scale: float = Field(default=1.0, gt=0)
    scheme: StepScheme = StepScheme.RKC
    max_halvings: int | None = Field(default=None, ge=0)

    @field_validator("snapshot_times")
    @classmethod
    def _sorted_times(cls, value: list[float] | None) -> list[float] | None:
        if value is None:
            return value
        if any(t < 0 for t in value):
            raise ValueError("snapshot times must be nonnegative")
        return sorted(set(value))

    @model_validator(mode="after")
    def _times_within_run(self) -> "FlowSettings":
        if self.snapshot_times and self.snapshot_times[-1] > self.t_end + _TIME_TOL:
            raise ValueError("snapshot times exceed t_end")
        return self

    def resolved_snapshot_times(self) -> list[float]:
        if self.snapshot_times:
            times = list(self.snapshot_times)
        else:
            count = int(math.floor(self.t_end / self.snapshot_every + _TIME_TOL))
            times = [round(k * self.snapshot_every, 12) for k in range(count + 1)]
        if times[0] > 0:
            times.insert(0, 0.0)
        if times[-1] < self.t_end - _TIME_TOL:
            times.append(self.t_end)
        return times


@dataclass(frozen=True)
class Snapshot:
    t: float
    phi: np.ndarray
    phidot: np.ndarray

    @property
    def sup_phi(self) -> float:
        return float(np.max(np.abs(self.phi)))

    @property
    def sup_phidot(self) -> float:
        return float(np.max(np.abs(self.phidot)))


@dataclass
class Trajectory:
    surface: SurfaceData
    grid: FlowGrid
    settings: FlowSettings
    snapshots: list[Snapshot] = field(default_factory=list)
    steps: list[StepEvent] = field(default_factory=list)

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    @property
    def total_halvings(self) -> int:
        return sum(e.halvings for e in self.steps)

    @property
    def reduced(self) -> bool:
        return isinstance(self.grid, ReducedGrid)

    def snapshot_at(self, t: float) -> Snapshot:
        for snap in self.snapshots:
            if abs(snap.t - t) <= 1e-9:
                return snap
        raise KeyError(f"no snapshot at t={t}")


def initial_potential(grid: FlowGrid, expression: str) -> np.ndarray:
    data = parse_initial_data(expression)
    phi = grid.initial_values(data)
    try:
        grid.check_positive(phi, 0.0)
        grid.log_argument(grid.argument(phi, 0.0), phi, 0.0)
    except PositivityLoss as exc:
        raise InvalidInitialData(
            "omega_0 = omega~(0) + i ddbar rho is not positive definite",
            {"expression": expression, **exc.diagnostics},
        ) from exc
    return phi


def run(
    surface: SurfaceData,
    settings: FlowSettings,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
    max_halvings: int = 8,
    max_stages: int = 600,
) -> Trajectory:
    grid = build_grid(surface, settings.solver.value, settings.n, settings.n_fiber, settings.n_u, settings.leaf_scale)
    try:
        phi = initial_potential(grid, settings.initial_data)
    except InvalidInitialData as exc:
        if logger is not None:
            logger.error("initial_data_rejected", str(exc), **exc.diagnostics)
        raise
    integrator = Integrator(
        grid,
        scheme=settings.scheme,
        max_halvings=settings.max_halvings if settings.max_halvings is not None else max_halvings,
        max_stages=max_stages,
        logger=logger,
        metrics=metrics,
    )
    trajectory = Trajectory(surface=surface, grid=grid, settings=settings)
    t = 0.0
    for target in settings.resolved_snapshot_times():
        while t < target - _TIME_TOL:
            dt = min(settings.dt, target - t)
            phi, event = integrator.step(phi, t, dt)
            t = target if abs(event.t - target) <= _TIME_TOL else event.t
            trajectory.steps.append(event)
        snap = Snapshot(t=target, phi=phi.copy(), phidot=grid.rhs(phi, target))
        trajectory.snapshots.append(snap)
        if logger is not None:
            logger.debug("snapshot", "Snapshot recorded", t=target, sup_phi=snap.sup_phi, sup_phidot=snap.sup_phidot)
    if logger is not None:
        logger.info(
            "flow_done",
            "Flow integration finished",
            solver=settings.solver.value,
            nodes=grid.size,
            steps=len(trajectory.steps),
            halvings=trajectory.total_halvings,
        )
    return trajectory
