from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

Function = Callable[[np.ndarray], np.ndarray]

# rows: d/dz_k = (d/dx_k - i d/dy_k) / 2 over real directions (x1, y1, x2, y2)
HOLOMORPHIC = np.array([[0.5, -0.5j, 0.0, 0.0], [0.0, 0.0, 0.5, -0.5j]])
ANTIHOLOMORPHIC = HOLOMORPHIC.conj()


class DifferentiationMethod(str, Enum):
    CENTRAL = "central"
    RICHARDSON = "richardson"
    COMPLEX_STEP = "complex_step"


def _shape_offsets(offsets: np.ndarray, ndim: int) -> np.ndarray:
    return offsets.reshape((offsets.shape[0],) + (1,) * (ndim - 1) + (4,))


@dataclass(frozen=True)
class Differentiator:
    """Partial derivatives in the real coordinates (x1, y1, x2, y2).

    Results carry the derivative direction on the last axis. ``outer_step``
    is used when a derivative is taken of something that was itself
    differentiated numerically.
    """

    step: float = 1e-3
    outer_step: float = 2e-3
    third_step: float = 5e-3
    complex_step: float = 1e-20
    method: DifferentiationMethod = DifferentiationMethod.COMPLEX_STEP

    def central(self, f: Function, x: np.ndarray, h: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        eye = np.eye(4) * h
        offsets = _shape_offsets(np.concatenate([eye, -eye]), x.ndim)
        vals = f(x[None, ...] + offsets)
        d = (vals[0:4] - vals[4:8]) / (2.0 * h)
        return np.moveaxis(d, 0, -1)

    def richardson(self, f: Function, x: np.ndarray, h: float) -> np.ndarray:
        """Two-level Richardson extrapolation of central differences, error O(h^4)."""
        x = np.asarray(x, dtype=float)
        eye = np.eye(4)
        offsets = _shape_offsets(np.concatenate([h * eye, -h * eye, 0.5 * h * eye, -0.5 * h * eye]), x.ndim)
        vals = f(x[None, ...] + offsets)
        coarse = (vals[0:4] - vals[4:8]) / (2.0 * h)
        fine = (vals[8:12] - vals[12:16]) / h
        return np.moveaxis((4.0 * fine - coarse) / 3.0, 0, -1)

    def complex_step_gradient(self, f: Function, x: np.ndarray) -> np.ndarray:
        """Im f(x + ih e_k) / h; f must be real on real input and holomorphically extendable."""
        x = np.asarray(x, dtype=float)
        offsets = _shape_offsets(np.eye(4) * (1j * self.complex_step), x.ndim)
        vals = f(x[None, ...] + offsets)
        return np.moveaxis(np.imag(vals) / self.complex_step, 0, -1)

    def first(self, f: Function, x: np.ndarray, analytic: bool = False) -> np.ndarray:
        if self.method is DifferentiationMethod.COMPLEX_STEP and analytic:
            return self.complex_step_gradient(f, x)
        if self.method is DifferentiationMethod.CENTRAL:
            return self.central(f, x, self.step)
        return self.richardson(f, x, self.step)

    def outer(self, f: Function, x: np.ndarray, level: int = 2) -> np.ndarray:
        h = self.outer_step if level == 2 else self.third_step
        if self.method is DifferentiationMethod.CENTRAL:
            return self.central(f, x, h)
        return self.richardson(f, x, h)


def holomorphic(d: np.ndarray) -> np.ndarray:
    """Real-direction derivative on the last axis -> d/dz_k on the last axis."""
    return np.einsum("...a,ka->...k", d, HOLOMORPHIC)


def antiholomorphic(d: np.ndarray) -> np.ndarray:
    return np.einsum("...a,ka->...k", d, ANTIHOLOMORPHIC)


def default_differentiator(step: float = 1e-3) -> Differentiator:
    return Differentiator(step=step, outer_step=max(2 * step, 1e-3), third_step=max(5 * step, 5e-3))
