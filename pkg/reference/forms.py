from __future__ import annotations

import math
from typing import Any, Callable

import numpy as np

from core.exceptions import BadKind
from core.types import SurfaceKind
from geometry.fields import MetricField, combine, euclidean, stack_components
from surfaces.construct import SPlusData, SurfaceData


def _y2(x: np.ndarray) -> np.ndarray:
    return x[..., 3]


def _zeros(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x[..., 3])


def alpha() -> MetricField:
    def evaluator(x: np.ndarray) -> np.ndarray:
        z = _zeros(x)
        return stack_components(z, 0.25 / _y2(x) ** 2, z, z)

    return MetricField(name="alpha", evaluator=evaluator)


def alpha_prime() -> MetricField:
    def evaluator(x: np.ndarray) -> np.ndarray:
        z = _zeros(x)
        return stack_components(z, 0.5 / _y2(x) ** 2, z, z)

    return MetricField(name="alpha_prime", evaluator=evaluator)


def beta() -> MetricField:
    def evaluator(x: np.ndarray) -> np.ndarray:
        z = _zeros(x)
        return stack_components(_y2(x), z, z, z)

    return MetricField(name="beta", evaluator=evaluator)


def gamma(m_slope: float) -> MetricField:
    """(dz1 - w dz2) wedge its conjugate with w = (y1 - m log y2) / y2."""

    def evaluator(x: np.ndarray) -> np.ndarray:
        w = (x[..., 1] - m_slope * np.log(x[..., 3])) / x[..., 3]
        return stack_components(np.ones_like(w), w * w, -w, np.zeros_like(w))

    return MetricField(name="gamma", evaluator=evaluator)


def tricerri() -> MetricField:
    return combine("tricerri", [(4.0, alpha()), (1.0, beta())])


def vaisman(m_slope: float) -> MetricField:
    return combine("vaisman", [(2.0, alpha_prime()), (1.0, gamma(m_slope))])


def base_form(kind: SurfaceKind) -> MetricField:
    """The limit form omega_infinity: alpha on S_M, alpha' on S+."""
    return alpha() if kind is SurfaceKind.SM else alpha_prime()


def omega_tilde(lf: MetricField, omega_inf: MetricField, t: float) -> MetricField:
    decay = math.exp(-t)
    field = combine(
        f"omega_tilde({lf.name})",
        [(decay, lf), (1.0 - decay, omega_inf)],
        t=t,
        surface=lf.surface,
    )
    slope = combine("d/dt omega_tilde", [(-decay, lf), (decay, omega_inf)])
    return MetricField(
        name=field.name,
        evaluator=field.evaluator,
        analytic=field.analytic,
        t=t,
        time_derivative=slope.evaluator,
        surface=lf.surface,
    )


def explicit_solution(kind: SurfaceKind, t: float, m_slope: float = 1.0) -> MetricField:
    """e^-t beta + (1 + 3e^-t) alpha on S_M; e^-t gamma + (1 + e^-t) alpha' on S+."""
    decay = math.exp(-t)
    if kind is SurfaceKind.SM:
        leaf, base, weight = beta(), alpha(), 3.0
    else:
        leaf, base, weight = gamma(m_slope), alpha_prime(), 1.0
    field = combine(f"explicit_{kind.value}", [(decay, leaf), (1.0 + weight * decay, base)])
    slope = combine("d/dt explicit", [(-decay, leaf), (-weight * decay, base)])
    return MetricField(
        name=field.name,
        evaluator=field.evaluator,
        analytic=True,
        t=t,
        time_derivative=slope.evaluator,
    )


def _m_slope(surface: SurfaceData | None, m_slope: float | None) -> float:
    if m_slope is not None:
        return m_slope
    if isinstance(surface, SPlusData):
        return surface.m_slope
    return 1.0


def _surface_kind(surface: SurfaceData | None, default: SurfaceKind) -> SurfaceKind:
    return surface.kind if surface is not None else default


def _default_lf(surface: SurfaceData | None, m_slope: float | None) -> MetricField:
    if _surface_kind(surface, SurfaceKind.SM) is SurfaceKind.SM:
        return tricerri()
    return vaisman(_m_slope(surface, m_slope))


FormFactory = Callable[..., MetricField]

FORM_REGISTRY: dict[str, FormFactory] = {
    "alpha": lambda **_: alpha(),
    "alpha-prime": lambda **_: alpha_prime(),
    "beta": lambda **_: beta(),
    "gamma": lambda surface=None, m_slope=None, **_: gamma(_m_slope(surface, m_slope)),
    "tricerri": lambda **_: tricerri(),
    "vaisman": lambda surface=None, m_slope=None, **_: vaisman(_m_slope(surface, m_slope)),
    "omega-infinity": lambda surface=None, **_: base_form(_surface_kind(surface, SurfaceKind.SM)),
    "omega-tilde": lambda surface=None, t=0.0, lf=None, m_slope=None, **_: omega_tilde(
        lf or _default_lf(surface, m_slope),
        base_form(_surface_kind(surface, SurfaceKind.SM)),
        t,
    ),
    "explicit-sm": lambda t=0.0, **_: explicit_solution(SurfaceKind.SM, t),
    "explicit-splus": lambda surface=None, t=0.0, m_slope=None, **_: explicit_solution(
        SurfaceKind.SPLUS, t, _m_slope(surface, m_slope)
    ),
    "euclidean": lambda **_: euclidean(),
}


def get_form(kind: str, **kwargs: Any) -> MetricField:
    key = kind.replace("_", "-").lower()
    factory = FORM_REGISTRY.get(key)
    if factory is None:
        raise BadKind(f"unknown form kind: {kind}", {"kind": kind, "known": sorted(FORM_REGISTRY)})
    return factory(**kwargs)


def eval_form(kind: str, pt: np.ndarray, t: float | None = None, **kwargs: Any) -> np.ndarray:
    if t is not None:
        kwargs["t"] = t
    return get_form(kind, **kwargs).matrix(pt)
