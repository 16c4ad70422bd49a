from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp


@dataclass(frozen=True)
class ConstantModeSolution:
    decay_coeff: float
    t_end: float
    dense: Any

    def phi(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_end + 1e-12) or np.any(t < 0):
            raise ValueError(f"t outside [0, {self.t_end}]")
        return np.asarray(self.dense(t))[0] if t.ndim else float(self.dense(t)[0])

    def phidot(self, t: float | np.ndarray) -> np.ndarray:
        phi = self.phi(t)
        return np.log1p(self.decay_coeff * np.exp(-np.asarray(t, dtype=float))) - phi

    def u(self, t: float | np.ndarray) -> np.ndarray:
        return self.phi(t) + self.phidot(t)


def constant_mode_ode(t_end: float, decay_coeff: float = 3.0, rtol: float = 1e-12, atol: float = 1e-14) -> ConstantModeSolution:
    """phi' = log(1 + a e^-t) - phi, phi(0) = 0; a = 3 gives the Tricerri potential on S_M."""
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return np.array([math.log1p(decay_coeff * math.exp(-t)) - y[0]])

    span_end = max(t_end, 1e-12)
    sol = solve_ivp(rhs, (0.0, span_end), [0.0], method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"constant mode integration failed: {sol.message}")
    return ConstantModeSolution(decay_coeff=decay_coeff, t_end=span_end, dense=sol.sol)
