from __future__ import annotations

import math

import numpy as np

from core.types import DiagnosticSeries, FitModel, RateFit

FIT_FLOOR = 1e-13
WINDOW_START = 1.0
STABILITY_FACTOR = 2.0


def _window(series: DiagnosticSeries, window_start: float, floor: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(series.times, dtype=float)
    v = np.abs(np.asarray(series.values, dtype=float))
    keep = (t >= window_start) & (v > floor)
    return t[keep], v[keep]


def is_negligible(series: DiagnosticSeries, window_start: float = WINDOW_START, floor: float = FIT_FLOOR) -> bool:
    t = np.asarray(series.times, dtype=float)
    v = np.abs(np.asarray(series.values, dtype=float))
    return bool(np.all(v[t >= window_start] <= floor))


def fit_exponential(series: DiagnosticSeries, window_start: float = WINDOW_START, floor: float = FIT_FLOOR) -> RateFit:
    """log v = log C - eps t by least squares over the window."""
    t, v = _window(series, window_start, floor)
    if len(t) < 2:
        return RateFit(model=FitModel.EXPONENTIAL, coefficient=0.0, rate=None, points=len(t), window_start=window_start)
    slope, intercept = np.polyfit(t, np.log(v), 1)
    residual = float(np.sqrt(np.mean((np.log(v) - (intercept + slope * t)) ** 2)))
    return RateFit(
        model=FitModel.EXPONENTIAL,
        coefficient=float(math.exp(intercept)),
        rate=float(-slope),
        residual=residual,
        points=len(t),
        window_start=window_start,
    )


def _fixed_shape_fit(
    model: FitModel,
    series: DiagnosticSeries,
    log_shape,
    window_start: float,
    floor: float,
    rate: float | None,
) -> RateFit:
    t, v = _window(series, window_start, floor)
    if len(t) == 0:
        return RateFit(model=model, coefficient=0.0, rate=rate, points=0, window_start=window_start)
    offsets = np.log(v) - log_shape(t)
    log_c = float(np.mean(offsets))
    residual = float(np.sqrt(np.mean((offsets - log_c) ** 2)))
    return RateFit(model=model, coefficient=math.exp(log_c), rate=rate, residual=residual, points=len(t), window_start=window_start)


def fit_linear_exponential(series: DiagnosticSeries, window_start: float = WINDOW_START, floor: float = FIT_FLOOR) -> RateFit:
    """C (1 + t) e^-t."""
    return _fixed_shape_fit(FitModel.LINEAR_EXPONENTIAL, series, lambda t: np.log1p(t) - t, window_start, floor, 1.0)


def fit_half_growth(series: DiagnosticSeries, window_start: float = 0.0, floor: float = FIT_FLOOR) -> RateFit:
    """C e^{t/2}."""
    return _fixed_shape_fit(FitModel.HALF_GROWTH, series, lambda t: 0.5 * t, window_start, floor, -0.5)


def fit_constant(series: DiagnosticSeries, window_start: float = 0.0) -> RateFit:
    t = np.asarray(series.times, dtype=float)
    v = np.abs(np.asarray(series.values, dtype=float))[t >= window_start]
    bound = float(np.max(v)) if len(v) else 0.0
    return RateFit(model=FitModel.CONSTANT, coefficient=bound, rate=None, points=int(len(v)), window_start=window_start)


def first_half(series: DiagnosticSeries, window_start: float = WINDOW_START) -> DiagnosticSeries:
    t_end = series.times[-1]
    cut = window_start + 0.5 * (t_end - window_start)
    pairs = [(t, v) for t, v in zip(series.times, series.values) if t <= cut + 1e-12]
    return DiagnosticSeries(label=f"{series.label}[first-half]", times=[p[0] for p in pairs], values=[p[1] for p in pairs])


def stable(full: RateFit, half: RateFit, factor: float = STABILITY_FACTOR) -> bool:
    """Fitted C on the first half of the window within ``factor`` of the full-window C."""
    if full.coefficient == 0.0 or half.coefficient == 0.0:
        return full.coefficient == half.coefficient
    ratio = half.coefficient / full.coefficient
    return 1.0 / factor <= ratio <= factor


def evaluate_fit(fit: RateFit, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    c = fit.coefficient
    if fit.model is FitModel.EXPONENTIAL:
        return c * np.exp(-(fit.rate or 0.0) * t)
    if fit.model is FitModel.LINEAR_EXPONENTIAL:
        return c * (1.0 + t) * np.exp(-t)
    if fit.model is FitModel.HALF_GROWTH:
        return c * np.exp(0.5 * t)
    return np.full_like(t, c)
