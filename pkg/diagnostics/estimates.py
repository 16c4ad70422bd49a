from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from core.exceptions import InsufficientData
from core.types import DiagnosticSeries, DiagnosticVerdict
from flow.reconstruct import reconstruct_metric
from flow.runner import Snapshot, Trajectory
from geometry.chern import christoffel, inverse_metric, trace_matrices
from geometry.differentiation import Differentiator, default_differentiator
from geometry.norms import contract_norm
from reference.forms import omega_tilde

from .fitting import (
    WINDOW_START,
    first_half,
    fit_constant,
    fit_exponential,
    fit_half_growth,
    fit_linear_exponential,
    is_negligible,
    stable,
)

MIN_SNAPSHOTS = 8
ENVELOPE_SLACK = 2.0
MIN_TRACE_RATE = 0.1
BOUND_C = 10.0
CALABI_SLACK = 0.05
CALABI_FLOOR = 1e-8
IDENTITY_TOL = 1e-7


@dataclass(frozen=True)
class SnapshotMetrics:
    t: float
    sup_phi: float
    sup_phidot: float
    phidot_upper: float
    phidot_lower: float
    trace_gap_tilde: float
    trace_gap_omega: float
    r_min: float
    r_max: float
    sup_u: float
    sup_grad_u: float
    volume_ratio_min: float
    volume_ratio_max: float
    evolution_residual: float
    calabi: float


@dataclass(frozen=True)
class TrajectoryProfile:
    metrics: list[SnapshotMetrics]

    @property
    def times(self) -> list[float]:
        return [m.t for m in self.metrics]

    def series(self, label: str) -> DiagnosticSeries:
        return DiagnosticSeries(label=label, times=self.times, values=[float(getattr(m, label)) for m in self.metrics])


@dataclass(frozen=True)
class DiagnosticOutcome:
    verdict: DiagnosticVerdict
    series: list[DiagnosticSeries]


Source = Union[Trajectory, TrajectoryProfile]


def calabi_samples(trajectory: Trajectory, count: int = 12, seed: int = 42) -> np.ndarray:
    return trajectory.surface.domain.sample(count, np.random.default_rng(seed))


def calabi_value(trajectory: Trajectory, snapshot: Snapshot, pts: np.ndarray, diff: Differentiator | None = None) -> float:
    """max |Gamma - Gamma~|^2_g over pts."""
    grid = trajectory.grid
    omega = reconstruct_metric(grid, snapshot)
    reference = omega_tilde(grid.lf, grid.base, snapshot.t)
    diff = diff or default_differentiator()
    psi = christoffel(omega, pts, diff) - christoffel(reference, pts, diff)
    g = omega.matrix(pts)
    return float(np.max(contract_norm(psi, "uhh", g, inverse_metric(g)) ** 2))


def snapshot_metrics(trajectory: Trajectory, snapshot: Snapshot, pts: np.ndarray, diff: Differentiator | None = None) -> SnapshotMetrics:
    grid = trajectory.grid
    t, phi, phidot = snapshot.t, snapshot.phi, snapshot.phidot
    g_tilde = grid.background(t)
    g = grid.metric(phi, t)
    u = phi + phidot
    r = grid.scalar_curvature(phi, phidot, t)
    det = (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]).real
    det_tilde = (g_tilde[:, 0, 0] * g_tilde[:, 1, 1] - g_tilde[:, 0, 1] * g_tilde[:, 1, 0]).real
    volume = det / det_tilde
    residual = grid.rhs_rate(phi, phidot, t) - (-r - 1.0 - phidot)
    return SnapshotMetrics(
        t=t,
        sup_phi=float(np.max(np.abs(phi))),
        sup_phidot=float(np.max(np.abs(phidot))),
        phidot_upper=float(max(np.max(phidot), 0.0)),
        phidot_lower=float(max(np.max(-phidot), 0.0)),
        trace_gap_tilde=float(np.max(np.abs(trace_matrices(g, g_tilde) - 2.0))),
        trace_gap_omega=float(np.max(np.abs(trace_matrices(g_tilde, g) - 2.0))),
        r_min=float(np.min(r)),
        r_max=float(np.max(r)),
        sup_u=float(np.max(np.abs(u))),
        sup_grad_u=float(np.max(grid.gradient_norm_sq(u, phi, t))),
        volume_ratio_min=float(np.min(volume)),
        volume_ratio_max=float(np.max(volume)),
        evolution_residual=float(np.max(np.abs(residual))),
        calabi=calabi_value(trajectory, snapshot, pts, diff),
    )


def profile_trajectory(
    trajectory: Trajectory,
    workers: int = 1,
    samples: int = 12,
    seed: int = 42,
    diff: Differentiator | None = None,
) -> TrajectoryProfile:
    if len(trajectory.snapshots) < MIN_SNAPSHOTS:
        raise InsufficientData(
            f"diagnostics need at least {MIN_SNAPSHOTS} snapshots",
            {"snapshots": len(trajectory.snapshots)},
        )
    pts = calabi_samples(trajectory, samples, seed)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        metrics = list(pool.map(lambda snap: snapshot_metrics(trajectory, snap, pts, diff), trajectory.snapshots))
    return TrajectoryProfile(metrics=metrics)


def _profile(source: Source) -> TrajectoryProfile:
    profile = profile_trajectory(source) if isinstance(source, Trajectory) else source
    if len(profile.metrics) < MIN_SNAPSHOTS:
        raise InsufficientData(
            f"diagnostics need at least {MIN_SNAPSHOTS} snapshots",
            {"snapshots": len(profile.metrics)},
        )
    return profile


def _require(series: DiagnosticSeries) -> None:
    if len(series.times) < MIN_SNAPSHOTS:
        raise InsufficientData(f"series {series.label} has {len(series.times)} points", {"label": series.label})


def judge_potential_decay(series: DiagnosticSeries) -> DiagnosticVerdict:
    _require(series)
    full = fit_linear_exponential(series)
    half = fit_linear_exponential(first_half(series))
    tolerances = {"envelope_slack": ENVELOPE_SLACK, "stability_factor": 2.0}
    if is_negligible(series):
        return DiagnosticVerdict(
            quantity="potential_decay", passed=True, reason="sup|phi| numerically zero", fits={"full": full}, tolerances=tolerances, series=[series.label]
        )
    t = np.asarray(series.times)
    envelope = ENVELOPE_SLACK * full.coefficient * (1.0 + t) * np.exp(-t)
    holds = bool(np.all(np.abs(series.values) <= envelope))
    is_stable = stable(full, half)
    if holds and is_stable:
        reason = "sup|phi| <= C(1+t)e^-t at every snapshot"
    elif not holds:
        worst = float(np.max(np.abs(series.values) / envelope))
        reason = f"envelope violated by factor {worst:.3g}"
    else:
        reason = "fitted C unstable between first half and full window"
    return DiagnosticVerdict(
        quantity="potential_decay",
        passed=holds and is_stable,
        reason=reason,
        fits={"full": full, "first_half": half},
        tolerances=tolerances,
        series=[series.label],
    )


def judge_trace_gaps(tilde: DiagnosticSeries, omega: DiagnosticSeries) -> DiagnosticVerdict:
    _require(tilde)
    _require(omega)
    fits = {}
    failures = []
    for series in (tilde, omega):
        fit = fit_exponential(series)
        fits[series.label] = fit
        if is_negligible(series) or fit.rate is None:
            continue
        if fit.rate < MIN_TRACE_RATE:
            failures.append(f"{series.label} rate {fit.rate:.3g} < {MIN_TRACE_RATE}")
    return DiagnosticVerdict(
        quantity="trace_gaps",
        passed=not failures,
        reason="; ".join(failures) or "trace gaps decay exponentially",
        fits=fits,
        tolerances={"min_rate": MIN_TRACE_RATE},
        series=[tilde.label, omega.label],
    )


def judge_scalar_curvature(r_min: DiagnosticSeries, r_max: DiagnosticSeries, c0: float = BOUND_C, c1: float = BOUND_C) -> DiagnosticVerdict:
    _require(r_min)
    t = np.asarray(r_max.times)
    lower_ok = bool(np.all(np.asarray(r_min.values) >= -c0))
    upper_ok = bool(np.all(np.asarray(r_max.values) <= c1 * np.exp(0.5 * t)))
    negative = DiagnosticSeries(label="r_min_negative", times=r_min.times, values=[max(-v, 0.0) for v in r_min.values])
    positive = DiagnosticSeries(label="r_max_positive", times=r_max.times, values=[max(v, 0.0) for v in r_max.values])
    failures = []
    if not lower_ok:
        failures.append(f"R_min {min(r_min.values):.4g} < -{c0:g}")
    if not upper_ok:
        failures.append(f"R_max exceeds {c1:g} e^(t/2)")
    return DiagnosticVerdict(
        quantity="scalar_curvature_bounds",
        passed=lower_ok and upper_ok,
        reason="; ".join(failures) or "-C <= R <= C e^(t/2)",
        fits={"lower": fit_constant(negative), "upper": fit_half_growth(positive)},
        tolerances={"c0": c0, "c1": c1},
        series=[r_min.label, r_max.label],
    )


def judge_calabi(series: DiagnosticSeries, informational: bool = False, trend_start: float = 2.0) -> DiagnosticVerdict:
    _require(series)
    late = [(t, v) for t, v in zip(series.times, series.values) if t >= trend_start - 1e-12]
    if late:
        anchor = late[0][1]
        peak = max(v for _, v in late)
        no_trend = peak <= anchor * (1.0 + CALABI_SLACK) + CALABI_FLOOR
    else:
        no_trend = True
    passed = no_trend or informational
    if no_trend:
        reason = f"S bounded, max {max(series.values):.4g}"
    else:
        reason = f"S grows after t={trend_start:g}"
    return DiagnosticVerdict(
        quantity="calabi_quantity",
        passed=passed,
        informational=informational,
        reason=reason,
        fits={"bound": fit_constant(series)},
        tolerances={"trend_slack": CALABI_SLACK, "trend_start": trend_start},
        series=[series.label],
    )


def judge_u_quantity(sup_u: DiagnosticSeries, sup_grad: DiagnosticSeries, bound: float = BOUND_C) -> DiagnosticVerdict:
    _require(sup_u)
    u_ok = max(sup_u.values) <= bound
    grad_ok = max(sup_grad.values) <= bound
    return DiagnosticVerdict(
        quantity="u_quantity",
        passed=u_ok and grad_ok,
        reason="u and |grad u|^2 bounded" if u_ok and grad_ok else f"sup|u| or sup|grad u|^2 exceeds {bound:g}",
        fits={"u": fit_constant(sup_u), "grad_u": fit_constant(sup_grad)},
        tolerances={"bound": bound},
        series=[sup_u.label, sup_grad.label],
    )


def judge_phidot_bounds(
    sup_phidot: DiagnosticSeries,
    upper: DiagnosticSeries,
    lower: DiagnosticSeries,
    bound: float = BOUND_C,
) -> DiagnosticVerdict:
    _require(sup_phidot)
    late = [v for t, v in zip(sup_phidot.times, sup_phidot.values) if t >= WINDOW_START]
    ok = max(late, default=0.0) <= bound
    return DiagnosticVerdict(
        quantity="phidot_bounds",
        passed=ok,
        reason=f"|phidot| <= {bound:g} for t >= {WINDOW_START:g}" if ok else f"|phidot| exceeds {bound:g}",
        fits={"two_sided": fit_exponential(sup_phidot), "sigma": fit_exponential(upper), "eta": fit_exponential(lower)},
        tolerances={"bound": bound},
        series=[sup_phidot.label, upper.label, lower.label],
    )


def judge_volume_ratio(vmin: DiagnosticSeries, vmax: DiagnosticSeries, bound: float = BOUND_C) -> DiagnosticVerdict:
    _require(vmin)
    ok = min(vmin.values) >= 1.0 / bound and max(vmax.values) <= bound
    return DiagnosticVerdict(
        quantity="volume_ratio",
        passed=ok,
        reason="C^-1 <= omega^2/omega~^2 <= C" if ok else "volume ratio outside [1/C, C]",
        fits={"max": fit_constant(vmax)},
        tolerances={"bound": bound},
        series=[vmin.label, vmax.label],
    )


def judge_evolution_identity(series: DiagnosticSeries, tolerance: float = IDENTITY_TOL) -> DiagnosticVerdict:
    _require(series)
    worst = max(series.values)
    return DiagnosticVerdict(
        quantity="evolution_identity",
        passed=worst <= tolerance,
        reason=f"max residual {worst:.3g}",
        tolerances={"tolerance": tolerance},
        series=[series.label],
    )


def potential_decay(source: Source) -> DiagnosticOutcome:
    series = _profile(source).series("sup_phi")
    return DiagnosticOutcome(judge_potential_decay(series), [series])


def trace_gaps(source: Source) -> DiagnosticOutcome:
    profile = _profile(source)
    tilde, omega = profile.series("trace_gap_tilde"), profile.series("trace_gap_omega")
    return DiagnosticOutcome(judge_trace_gaps(tilde, omega), [tilde, omega])


def scalar_curvature_bounds(source: Source) -> DiagnosticOutcome:
    profile = _profile(source)
    r_min, r_max = profile.series("r_min"), profile.series("r_max")
    return DiagnosticOutcome(judge_scalar_curvature(r_min, r_max), [r_min, r_max])


def calabi_quantity(source: Source, informational: bool = False) -> DiagnosticOutcome:
    series = _profile(source).series("calabi")
    return DiagnosticOutcome(judge_calabi(series, informational), [series])


def u_quantity(source: Source) -> DiagnosticOutcome:
    profile = _profile(source)
    sup_u, grad = profile.series("sup_u"), profile.series("sup_grad_u")
    return DiagnosticOutcome(judge_u_quantity(sup_u, grad), [sup_u, grad])


def phidot_bounds(source: Source) -> DiagnosticOutcome:
    profile = _profile(source)
    series = [profile.series(label) for label in ("sup_phidot", "phidot_upper", "phidot_lower")]
    return DiagnosticOutcome(judge_phidot_bounds(*series), series)


def volume_ratio(source: Source) -> DiagnosticOutcome:
    profile = _profile(source)
    vmin, vmax = profile.series("volume_ratio_min"), profile.series("volume_ratio_max")
    return DiagnosticOutcome(judge_volume_ratio(vmin, vmax), [vmin, vmax])


def evolution_identity(source: Source) -> DiagnosticOutcome:
    series = _profile(source).series("evolution_residual")
    return DiagnosticOutcome(judge_evolution_identity(series), [series])


DIAGNOSTICS = {
    "potential_decay": potential_decay,
    "trace_gaps": trace_gaps,
    "scalar_curvature_bounds": scalar_curvature_bounds,
    "calabi_quantity": calabi_quantity,
    "u_quantity": u_quantity,
    "phidot_bounds": phidot_bounds,
    "volume_ratio": volume_ratio,
    "evolution_identity": evolution_identity,
}


def judge_series(series: dict[str, DiagnosticSeries], informational_calabi: bool = False) -> list[DiagnosticVerdict]:
    """Recompute every verdict from saved series alone."""

    def get(label: str) -> DiagnosticSeries:
        return series[label]

    judges = [
        ("potential_decay", lambda: judge_potential_decay(get("sup_phi"))),
        ("trace_gaps", lambda: judge_trace_gaps(get("trace_gap_tilde"), get("trace_gap_omega"))),
        ("scalar_curvature_bounds", lambda: judge_scalar_curvature(get("r_min"), get("r_max"))),
        ("calabi_quantity", lambda: judge_calabi(get("calabi"), informational_calabi)),
        ("u_quantity", lambda: judge_u_quantity(get("sup_u"), get("sup_grad_u"))),
        ("phidot_bounds", lambda: judge_phidot_bounds(get("sup_phidot"), get("phidot_upper"), get("phidot_lower"))),
        ("volume_ratio", lambda: judge_volume_ratio(get("volume_ratio_min"), get("volume_ratio_max"))),
        ("evolution_identity", lambda: judge_evolution_identity(get("evolution_residual"))),
    ]
    return [judge() for name, judge in judges if _available(name, series)]


_REQUIRED = {
    "potential_decay": ("sup_phi",),
    "trace_gaps": ("trace_gap_tilde", "trace_gap_omega"),
    "scalar_curvature_bounds": ("r_min", "r_max"),
    "calabi_quantity": ("calabi",),
    "u_quantity": ("sup_u", "sup_grad_u"),
    "phidot_bounds": ("sup_phidot", "phidot_upper", "phidot_lower"),
    "volume_ratio": ("volume_ratio_min", "volume_ratio_max"),
    "evolution_identity": ("evolution_residual",),
}


def _available(name: str, series: dict[str, DiagnosticSeries]) -> bool:
    return all(label in series for label in _REQUIRED[name])


def all_series(profile: TrajectoryProfile) -> list[DiagnosticSeries]:
    labels = [label for labels in _REQUIRED.values() for label in labels]
    return [profile.series(label) for label in labels]
