from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import PositivityLoss, StepFailure
from core.logger import StructuredLogger
from core.metrics import MetricsRegistry
from core.types import FlowSignal, StepEvent, StepScheme

from .grids import FlowGrid
from .monitors import FlowMonitors

RKC_DAMPING = 2.0 / 13.0
MIDPOINT_GUARD = 0.8


@dataclass(frozen=True)
class RKCCoefficients:
    """Second-order Runge-Kutta-Chebyshev recursion for s stages."""

    stages: int
    mu: np.ndarray
    nu: np.ndarray
    mu_tilde: np.ndarray
    gamma_tilde: np.ndarray
    c: np.ndarray

    @classmethod
    def build(cls, stages: int, damping: float = RKC_DAMPING) -> "RKCCoefficients":
        s = max(stages, 2)
        w0 = 1.0 + damping / s**2
        T = np.zeros(s + 1)
        dT = np.zeros(s + 1)
        ddT = np.zeros(s + 1)
        T[0], T[1] = 1.0, w0
        dT[1] = 1.0
        for j in range(2, s + 1):
            T[j] = 2.0 * w0 * T[j - 1] - T[j - 2]
            dT[j] = 2.0 * T[j - 1] + 2.0 * w0 * dT[j - 1] - dT[j - 2]
            ddT[j] = 4.0 * dT[j - 1] + 2.0 * w0 * ddT[j - 1] - ddT[j - 2]
        w1 = dT[s] / ddT[s]
        b = np.zeros(s + 1)
        b[2:] = ddT[2:] / dT[2:] ** 2
        b[0] = b[1] = b[2]
        mu = np.zeros(s + 1)
        nu = np.zeros(s + 1)
        mu_tilde = np.zeros(s + 1)
        gamma_tilde = np.zeros(s + 1)
        c = np.zeros(s + 1)
        mu_tilde[1] = b[1] * w1
        for j in range(2, s + 1):
            mu[j] = 2.0 * b[j] * w0 / b[j - 1]
            nu[j] = -b[j] / b[j - 2]
            mu_tilde[j] = 2.0 * b[j] * w1 / b[j - 1]
            gamma_tilde[j] = -(1.0 - b[j - 1] * T[j - 1]) * mu_tilde[j]
        c[2:] = dT[s] / ddT[s] * ddT[2:] / dT[2:]
        c[1] = mu_tilde[1]
        return cls(stages=s, mu=mu, nu=nu, mu_tilde=mu_tilde, gamma_tilde=gamma_tilde, c=c)


def rkc_stage_count(dt: float, spectral_radius: float) -> int:
    return max(2, 1 + int(math.floor(math.sqrt(1.0 + 1.54 * dt * spectral_radius))))


class Integrator:
    def __init__(
        self,
        grid: FlowGrid,
        scheme: StepScheme = StepScheme.RKC,
        max_halvings: int = 8,
        max_stages: int = 600,
        logger: StructuredLogger | None = None,
        metrics: MetricsRegistry | None = None,
        monitors: FlowMonitors | None = None,
    ) -> None:
        self.grid = grid
        self.scheme = scheme
        self.max_halvings = max_halvings
        self.max_stages = max_stages
        self.logger = logger
        self.metrics = metrics
        self.monitors = monitors or FlowMonitors()
        self._coefficients: dict[int, RKCCoefficients] = {}

    def _rhs(self, phi: np.ndarray, t: float) -> np.ndarray:
        if self.metrics is not None:
            self.metrics.inc("rhs_evaluations_total")
        return self.grid.rhs(phi, t)

    def _coeffs(self, stages: int) -> RKCCoefficients:
        cached = self._coefficients.get(stages)
        if cached is None:
            cached = RKCCoefficients.build(stages)
            self._coefficients[stages] = cached
        return cached

    def _midpoint(self, phi: np.ndarray, t: float, dt: float) -> np.ndarray:
        k1 = self._rhs(phi, t)
        k2 = self._rhs(phi + 0.5 * dt * k1, t + 0.5 * dt)
        return phi + dt * k2

    def _rkc(self, phi: np.ndarray, t: float, dt: float, stages: int) -> np.ndarray:
        co = self._coeffs(stages)
        f0 = self._rhs(phi, t)
        prev2 = phi
        prev = phi + co.mu_tilde[1] * dt * f0
        for j in range(2, co.stages + 1):
            fj = self._rhs(prev, t + co.c[j - 1] * dt)
            current = (
                (1.0 - co.mu[j] - co.nu[j]) * phi
                + co.mu[j] * prev
                + co.nu[j] * prev2
                + co.mu_tilde[j] * dt * fj
                + co.gamma_tilde[j] * dt * f0
            )
            prev2, prev = prev, current
        return prev

    def _plan(self, phi: np.ndarray, t: float, dt: float) -> tuple[float, int, FlowSignal | None]:
        rho = self.grid.spectral_radius(phi, t)
        if self.scheme is StepScheme.MIDPOINT:
            guard = MIDPOINT_GUARD / rho
            return rho, 2, self.monitors.check_guard(dt, guard, 2, self.max_stages)
        stages = rkc_stage_count(dt, rho) if math.isfinite(rho) else self.max_stages + 1
        return rho, stages, self.monitors.check_guard(dt, math.inf, stages, self.max_stages)

    def step(self, phi: np.ndarray, t: float, dt: float) -> tuple[np.ndarray, StepEvent]:
        if dt <= 0:
            raise ValueError("dt must be positive")
        requested = dt
        signals: list[FlowSignal] = []
        for halvings in range(self.max_halvings + 1):
            rho, stages, guard_signal = self._plan(phi, t, dt)
            if guard_signal is None:
                try:
                    if self.scheme is StepScheme.MIDPOINT:
                        candidate = self._midpoint(phi, t, dt)
                    else:
                        candidate = self._rkc(phi, t, dt, stages)
                    signals = self.monitors.evaluate_candidate(self.grid, candidate, t + dt)
                except PositivityLoss as exc:
                    signals = [self.monitors.positivity_signal(exc)]
                if not signals:
                    if self.metrics is not None:
                        self.metrics.inc("flow_steps_total")
                    return candidate, StepEvent(
                        t=t + dt,
                        dt_requested=requested,
                        dt_used=dt,
                        halvings=halvings,
                        stages=stages,
                        spectral_radius=rho,
                    )
            else:
                signals = [guard_signal]
            if halvings == self.max_halvings:
                break
            if self.metrics is not None:
                self.metrics.inc("flow_step_halvings_total")
            if self.logger is not None:
                self.logger.warning(
                    "step_halved",
                    "Step rejected, halving dt",
                    t=t,
                    dt=dt,
                    reason=signals[0].failure_type.value,
                    message=signals[0].message,
                )
            dt *= 0.5
        raise StepFailure(
            f"step from t={t:.6g} failed after {self.max_halvings} halvings",
            {
                "t": t,
                "dt_requested": requested,
                "dt_last": dt,
                "signals": [s.model_dump(mode="json") for s in signals],
            },
        )
