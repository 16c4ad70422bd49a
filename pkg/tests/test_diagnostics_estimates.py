from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from core.exceptions import InsufficientData
from core.types import DiagnosticSeries, FitModel
from diagnostics.estimates import (
    DIAGNOSTICS,
    MIN_SNAPSHOTS,
    evolution_identity,
    judge_calabi,
    judge_potential_decay,
    judge_scalar_curvature,
    judge_series,
    judge_trace_gaps,
    potential_decay,
    profile_trajectory,
    volume_ratio,
)
from diagnostics.fitting import evaluate_fit, fit_exponential, fit_linear_exponential, first_half
from diagnostics.scoring import diagnose
from flow.runner import FlowSettings, run
from surfaces.construct import construct_sm

TIMES = [0.5 * k for k in range(17)]


def _series(label: str, fn) -> DiagnosticSeries:
    return DiagnosticSeries(label=label, times=TIMES, values=[float(fn(t)) for t in TIMES])


@pytest.fixture(scope="module")
def short_trajectory():
    settings = FlowSettings(
        n=32,
        t_end=4.0,
        dt=2e-3,
        snapshot_every=0.5,
        initial_data="0.002 * sin(2 * pi * u / L)",
    )
    return run(construct_sm(), settings)


def test_exponential_fit_recovers_rate_and_constant():
    fit = fit_exponential(_series("x", lambda t: 2.0 * math.exp(-0.7 * t)))
    assert fit.model is FitModel.EXPONENTIAL
    assert fit.rate == pytest.approx(0.7)
    assert fit.coefficient == pytest.approx(2.0)
    assert fit.residual < 1e-10
    assert np.allclose(evaluate_fit(fit, np.array([1.0, 3.0])), 2.0 * np.exp(-0.7 * np.array([1.0, 3.0])))


def test_linear_exponential_fit_and_first_half():
    series = _series("sup_phi", lambda t: 0.3 * (1 + t) * math.exp(-t))
    fit = fit_linear_exponential(series)
    assert fit.coefficient == pytest.approx(0.3)
    half = first_half(series)
    assert half.times[-1] <= 1.0 + 0.5 * (TIMES[-1] - 1.0)
    assert fit_linear_exponential(half).coefficient == pytest.approx(0.3)


def test_potential_decay_verdicts():
    good = judge_potential_decay(_series("sup_phi", lambda t: 0.3 * (1 + t) * math.exp(-t)))
    assert good.passed
    assert set(good.fits) == {"full", "first_half"}

    flat = judge_potential_decay(_series("sup_phi", lambda t: 0.5))
    assert not flat.passed
    assert "envelope" in flat.reason


def test_trace_gap_rates():
    decaying = _series("trace_gap_tilde", lambda t: 0.2 * math.exp(-t))
    stuck = _series("trace_gap_omega", lambda t: 0.3)
    assert judge_trace_gaps(decaying, decaying.model_copy(update={"label": "trace_gap_omega"})).passed
    verdict = judge_trace_gaps(decaying, stuck)
    assert not verdict.passed
    assert "trace_gap_omega" in verdict.reason


def test_scalar_curvature_and_calabi_judges():
    r_min = _series("r_min", lambda t: -1.0)
    r_max = _series("r_max", lambda t: math.exp(0.5 * t))
    assert judge_scalar_curvature(r_min, r_max).passed
    assert not judge_scalar_curvature(_series("r_min", lambda t: -20.0), r_max).passed

    growing = _series("calabi", lambda t: 0.1 * (1 + t))
    assert not judge_calabi(growing).passed
    info = judge_calabi(growing, informational=True)
    assert info.passed and info.informational
    assert judge_calabi(_series("calabi", lambda t: 0.1 * math.exp(-t))).passed


def test_short_series_raise_insufficient_data():
    short = DiagnosticSeries(label="sup_phi", times=TIMES[: MIN_SNAPSHOTS - 1], values=[0.1] * (MIN_SNAPSHOTS - 1))
    with pytest.raises(InsufficientData):
        judge_potential_decay(short)


def test_series_model_rejects_bad_data():
    with pytest.raises(ValidationError):
        DiagnosticSeries(label="x", times=[0.0, 0.0], values=[1.0, 2.0])
    with pytest.raises(ValidationError):
        DiagnosticSeries(label="x", times=[0.0, 1.0], values=[1.0, float("nan")])


def test_judge_series_recomputes_every_quantity():
    series = {
        "sup_phi": _series("sup_phi", lambda t: 0.3 * (1 + t) * math.exp(-t)),
        "trace_gap_tilde": _series("trace_gap_tilde", lambda t: 0.2 * math.exp(-t)),
        "trace_gap_omega": _series("trace_gap_omega", lambda t: 0.2 * math.exp(-t)),
        "r_min": _series("r_min", lambda t: -1.0),
        "r_max": _series("r_max", lambda t: 0.5),
        "calabi": _series("calabi", lambda t: 1e-3 * math.exp(-t)),
        "sup_u": _series("sup_u", lambda t: 0.5),
        "sup_grad_u": _series("sup_grad_u", lambda t: 0.1),
        "sup_phidot": _series("sup_phidot", lambda t: math.exp(-t)),
        "phidot_upper": _series("phidot_upper", lambda t: math.exp(-t)),
        "phidot_lower": _series("phidot_lower", lambda t: 0.5 * math.exp(-t)),
        "volume_ratio_min": _series("volume_ratio_min", lambda t: 0.9),
        "volume_ratio_max": _series("volume_ratio_max", lambda t: 1.1),
        "evolution_residual": _series("evolution_residual", lambda t: 1e-12),
    }
    verdicts = judge_series(series)
    assert [v.quantity for v in verdicts] == list(DIAGNOSTICS)
    assert all(v.passed for v in verdicts)

    series["calabi"] = _series("calabi", lambda t: 0.1 * (1 + t))
    strict = {v.quantity: v for v in judge_series(series)}
    relaxed = {v.quantity: v for v in judge_series(series, informational_calabi=True)}
    assert not strict["calabi_quantity"].passed
    assert relaxed["calabi_quantity"].passed and relaxed["calabi_quantity"].informational

    del series["calabi"]
    assert "calabi_quantity" not in {v.quantity for v in judge_series(series)}


def test_trajectory_profile_and_exact_identities(short_trajectory):
    profile = profile_trajectory(short_trajectory, workers=2, samples=4)
    assert profile.times == short_trajectory.times
    assert evolution_identity(profile).verdict.passed
    assert volume_ratio(profile).verdict.passed
    assert all(np.isfinite(profile.series("calabi").values))
    assert potential_decay(profile).series[0].label == "sup_phi"


def test_diagnose_reports_every_quantity(short_trajectory, logger, metrics, capsys):
    result = diagnose(short_trajectory, workers=1, samples=4, logger=logger, metrics=metrics)
    assert result.report.total == len(DIAGNOSTICS)
    assert result.report.passed + result.report.failed == result.report.total
    assert len(result.series) == 14
    assert sum(v for k, v in metrics.snapshot().items() if k.startswith("diagnostics_total")) == len(DIAGNOSTICS)
    assert '"event": "diagnostic_verdict"' in capsys.readouterr().out


def test_too_few_snapshots_raise(sm_surface):
    trajectory = run(sm_surface, FlowSettings(n=16, t_end=1.0, dt=5e-3, snapshot_every=0.5))
    with pytest.raises(InsufficientData):
        profile_trajectory(trajectory)
