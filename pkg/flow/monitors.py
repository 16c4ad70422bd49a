from __future__ import annotations

import numpy as np

from core.exceptions import PositivityLoss
from core.types import FailureType, FlowSignal, Severity

from .grids import FlowGrid


class FlowMonitors:
    def check_guard(self, dt: float, guard: float, stages: int, max_stages: int) -> FlowSignal | None:
        if dt > guard or stages > max_stages:
            return FlowSignal(
                failure_type=FailureType.STEP_FAILURE,
                retryable=True,
                severity=Severity.LOW,
                message="time step exceeds the stability guard",
                recommended_action="halve_dt",
                diagnostics={"dt": dt, "guard": guard, "stages": stages, "max_stages": max_stages},
            )
        return None

    def evaluate_candidate(self, grid: FlowGrid, phi: np.ndarray, t: float) -> list[FlowSignal]:
        signals: list[FlowSignal] = []
        if not np.all(np.isfinite(phi)):
            signals.append(
                FlowSignal(
                    failure_type=FailureType.STEP_FAILURE,
                    retryable=True,
                    severity=Severity.MEDIUM,
                    message="non-finite potential after step",
                    recommended_action="halve_dt",
                    diagnostics={"t": t, "bad_nodes": int(np.count_nonzero(~np.isfinite(phi)))},
                )
            )
            return signals
        try:
            grid.check_positive(phi, t)
            arg = grid.argument(phi, t)
            if not np.all(arg > 0):
                index = int(np.argmax(~(arg > 0)))
                raise PositivityLoss("Monge-Ampere argument is not positive", {"t": t, **grid.location(index)})
        except PositivityLoss as exc:
            signals.append(self.positivity_signal(exc))
        return signals

    def positivity_signal(self, exc: PositivityLoss) -> FlowSignal:
        return FlowSignal(
            failure_type=FailureType.POSITIVITY_LOSS,
            retryable=True,
            severity=Severity.MEDIUM,
            message=str(exc),
            recommended_action="halve_dt",
            diagnostics=exc.diagnostics,
        )
