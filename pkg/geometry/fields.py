from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from core.exceptions import SingularMetric

ComponentEvaluator = Callable[[np.ndarray], np.ndarray]
ScalarEvaluator = Callable[[np.ndarray], np.ndarray]


def stack_components(g11: Any, g22: Any, re12: Any, im12: Any) -> np.ndarray:
    parts = np.broadcast_arrays(*(np.asarray(v) for v in (g11, g22, re12, im12)))
    return np.stack(parts, axis=-1)


def assemble(components: np.ndarray) -> np.ndarray:
    """[g11, g22, Re g12, Im g12] on the last axis -> Hermitian (..., 2, 2)."""
    comps = np.asarray(components)
    out = np.empty(comps.shape[:-1] + (2, 2), dtype=complex)
    g12 = comps[..., 2] + 1j * comps[..., 3]
    out[..., 0, 0] = comps[..., 0]
    out[..., 1, 1] = comps[..., 1]
    out[..., 0, 1] = g12
    out[..., 1, 0] = np.conj(g12)
    return out


def disassemble(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix)
    return stack_components(m[..., 0, 0].real, m[..., 1, 1].real, m[..., 0, 1].real, m[..., 0, 1].imag)


def leading_minors(components: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = np.real(components)
    det = c[..., 0] * c[..., 1] - c[..., 2] ** 2 - c[..., 3] ** 2
    return c[..., 0], det


def require_positive(components: np.ndarray, pts: np.ndarray, name: str) -> None:
    g11, det = leading_minors(components)
    bad = ~((g11 > 0) & (det > 0))
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise SingularMetric(
            f"{name} is not positive definite",
            {
                "metric": name,
                "point": np.asarray(pts)[tuple(idx)].real.tolist(),
                "g11": float(g11[tuple(idx)]),
                "det": float(det[tuple(idx)]),
            },
        )


@dataclass(frozen=True)
class ScalarField:
    name: str
    evaluator: ScalarEvaluator
    analytic: bool = True

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluator(x)


@dataclass(frozen=True)
class MetricField:
    """Hermitian metric g_{i jbar} given by real-analytic component functions.

    The evaluator maps points (..., 4) ordered (x1, y1, x2, y2) to
    components (..., 4) = [g11, g22, Re g12, Im g12]. When ``analytic`` is
    set the evaluator also accepts complex input and extends holomorphically,
    which enables complex-step differentiation.
    """

    name: str
    evaluator: ComponentEvaluator
    analytic: bool = True
    t: float | None = None
    time_derivative: ComponentEvaluator | None = None
    surface: Any = None

    def components(self, x: np.ndarray) -> np.ndarray:
        return self.evaluator(x)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return assemble(self.evaluator(np.asarray(x, dtype=float)))

    __call__ = matrix

    def time_derivative_matrix(self, x: np.ndarray) -> np.ndarray:
        if self.time_derivative is None:
            raise ValueError(f"metric {self.name} carries no time derivative")
        return assemble(self.time_derivative(np.asarray(x, dtype=float)))

    def check_positive(self, x: np.ndarray) -> None:
        require_positive(self.components(np.asarray(x, dtype=float)), x, self.name)

    def renamed(self, name: str) -> "MetricField":
        return replace(self, name=name)

    def scaled(self, factor: float) -> "MetricField":
        ev = self.evaluator
        dt = self.time_derivative
        return replace(
            self,
            name=f"{factor:g}*{self.name}",
            evaluator=lambda x: factor * ev(x),
            time_derivative=(lambda x: factor * dt(x)) if dt is not None else None,
        )

    def conformal(self, sigma: ScalarField) -> "MetricField":
        ev = self.evaluator
        return MetricField(
            name=f"exp({sigma.name})*{self.name}",
            evaluator=lambda x: np.exp(sigma(x))[..., None] * ev(x),
            analytic=self.analytic and sigma.analytic,
            surface=self.surface,
        )


def combine(name: str, terms: list[tuple[float, MetricField]], **kwargs: Any) -> MetricField:
    """Constant-coefficient linear combination of metric fields."""
    weights = [w for w, _ in terms]
    evaluators = [f.evaluator for _, f in terms]

    def evaluator(x: np.ndarray) -> np.ndarray:
        total = weights[0] * evaluators[0](x)
        for w, ev in zip(weights[1:], evaluators[1:]):
            total = total + w * ev(x)
        return total

    return MetricField(
        name=name,
        evaluator=evaluator,
        analytic=all(f.analytic for _, f in terms),
        **kwargs,
    )


def euclidean() -> MetricField:
    def evaluator(x: np.ndarray) -> np.ndarray:
        ones = np.ones_like(x[..., 0])
        zeros = np.zeros_like(x[..., 0])
        return stack_components(ones, ones, zeros, zeros)

    return MetricField(name="euclidean", evaluator=evaluator)
