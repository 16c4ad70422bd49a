from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.exceptions import NotStronglyFlat
from core.types import SurfaceKind
from geometry.chern import ddbar_scalar
from geometry.differentiation import Differentiator
from geometry.fields import MetricField, ScalarField

from .forms import base_form, beta, gamma

FLAT_TOLERANCE = 1e-8


def wedge_components(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficient of A ^ B against (sqrt(-1) dz1 ^ dz1bar) ^ (sqrt(-1) dz2 ^ dz2bar)."""
    return a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0] - 2.0 * (a[..., 2] * b[..., 2] + a[..., 3] * b[..., 3])


def wedge_density(form_a: MetricField, form_b: MetricField, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return wedge_components(form_a.components(x), form_b.components(x))


def _default_samples(n: int = 64, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(n, 4))
    pts[:, 3] = rng.uniform(1.0, 3.0, size=n)
    return pts


def _leaf_form(kind: SurfaceKind, field: MetricField) -> MetricField:
    if kind is SurfaceKind.SM:
        return beta()
    m_slope = getattr(field.surface, "m_slope", 1.0)
    return gamma(m_slope)


def is_strongly_flat(omega: MetricField, kind: SurfaceKind = SurfaceKind.SM, samples: np.ndarray | None = None) -> float:
    pts = _default_samples() if samples is None else np.asarray(samples, dtype=float)
    omega.check_positive(pts)
    g11 = omega.components(pts)[..., 0]
    ratio = g11 / pts[..., 3] if kind is SurfaceKind.SM else g11
    c = float(np.mean(ratio))
    spread = float(np.max(np.abs(ratio - c)) / abs(c))
    if spread > FLAT_TOLERANCE:
        raise NotStronglyFlat(
            f"{omega.name} is not strongly flat along the leaves",
            {"metric": omega.name, "relative_spread": spread, "tolerance": FLAT_TOLERANCE},
        )
    return c


def conformal_flatten(
    omega: MetricField,
    kind: SurfaceKind = SurfaceKind.SM,
    samples: np.ndarray | None = None,
) -> tuple[ScalarField, MetricField]:
    """e^sigma = (a ^ leaf) / (a ^ omega) with a the base form; returns sigma and e^sigma omega."""
    if samples is not None:
        omega.check_positive(np.asarray(samples, dtype=float))
    base = base_form(kind).evaluator
    leaf = _leaf_form(kind, omega).evaluator
    ev = omega.evaluator

    def sigma_eval(x: np.ndarray) -> np.ndarray:
        a = base(x)
        return np.log(wedge_components(a, leaf(x)) / wedge_components(a, ev(x)))

    sigma = ScalarField(name=f"sigma({omega.name})", evaluator=sigma_eval, analytic=omega.analytic)
    flat = omega.conformal(sigma).renamed(f"flat({omega.name})")
    return sigma, flat


@dataclass(frozen=True)
class VolumeDensity:
    """Omega = 2 a ^ omega_LF with a the base form, as a coefficient of the standard (2,2)-form."""

    c: float
    kind: SurfaceKind
    lf: MetricField

    def density(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * wedge_density(base_form(self.kind), self.lf, x)

    def log_field(self) -> ScalarField:
        base = base_form(self.kind).evaluator
        lf = self.lf.evaluator
        return ScalarField(
            name="log_omega",
            evaluator=lambda x: np.log(2.0 * wedge_components(base(x), lf(x))),
            analytic=self.lf.analytic,
        )

    def curvature_residual(self, samples: np.ndarray, diff: Differentiator | None = None) -> float:
        """max |ddbar log Omega - a| over samples."""
        pts = np.asarray(samples, dtype=float)
        lhs = ddbar_scalar(self.log_field(), pts, diff)
        return float(np.max(np.abs(lhs - base_form(self.kind).matrix(pts))))


def volume_density(lf: MetricField, kind: SurfaceKind = SurfaceKind.SM, samples: np.ndarray | None = None) -> VolumeDensity:
    c = is_strongly_flat(lf, kind, samples)
    return VolumeDensity(c=c, kind=kind, lf=lf)
