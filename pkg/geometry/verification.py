from __future__ import annotations

import math
from typing import Callable

import numpy as np

from core.types import IdentityCheck, SurfaceKind, TensorReport
from reference.flatness import volume_density
from reference.forms import alpha, alpha_prime, beta, explicit_solution, omega_tilde, tricerri, vaisman
from surfaces.construct import SMData, SPlusData

from .chern import (
    chern_package,
    chern_ricci,
    covariant_derivatives,
    exterior_derivative_norm,
    form_covariant_derivative,
    inverse_metric,
)
from .differentiation import Differentiator, default_differentiator
from .fields import MetricField
from .norms import contract_norm, tensor_norms

CLOSED_FORM_TOL = 1e-7
VANISHING_TOL = 1e-6
RICCI_TOL = 1e-6
CROSSCHECK_TOL = 1e-7
CLOSEDNESS_TOL = 1e-8
BOUND_C = 10.0


def _relative(value: np.ndarray, expected: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(expected))), 1e-300)
    return float(np.max(np.abs(value - expected))) / scale


def _check(name: str, description: str, deviation: float, tolerance: float, samples: int, relative: bool = False) -> IdentityCheck:
    return IdentityCheck(
        name=name,
        description=description,
        samples=samples,
        max_deviation=deviation,
        tolerance=tolerance,
        relative=relative,
        passed=bool(deviation < tolerance),
    )


def ncrf_residual(field: MetricField, pts: np.ndarray, diff: Differentiator | None = None) -> float:
    """max |d/dt omega + Ric(omega) + omega| at pts."""
    ricci, _ = chern_ricci(field, pts, diff)
    residual = field.time_derivative_matrix(pts) + ricci + field.matrix(pts)
    return float(np.max(np.abs(residual)))


def inhomogeneous_lf(surface: SMData, amplitude: float = 0.3) -> MetricField:
    """Strongly flat metric beta + 4(1 + a cos(2 pi log y2 / L)) alpha, not locally homogeneous."""
    wave = 2.0 * math.pi / surface.period
    base = alpha().evaluator
    leaf = beta().evaluator

    def evaluator(x: np.ndarray) -> np.ndarray:
        bump = 1.0 + amplitude * np.cos(wave * np.log(x[..., 3]))
        return leaf(x) + 4.0 * bump[..., None] * base(x)

    return MetricField(name="inhomogeneous_lf", evaluator=evaluator, surface=surface)


def _tricerri_checks(pts: np.ndarray, times: tuple[float, ...], diff: Differentiator) -> list[IdentityCheck]:
    y = pts[:, 3]
    worst: dict[str, float] = {}

    def record(key: str, value: float) -> None:
        worst[key] = max(worst.get(key, 0.0), value)

    for t in times:
        decay = math.exp(-t)
        field = omega_tilde(tricerri(), alpha(), t)
        pkg = chern_package(field, pts, diff)
        cov = covariant_derivatives(field, pts, diff)
        norms = tensor_norms(field, pkg, cov)
        record("tricerri_christoffel_1_21", _relative(pkg.gamma[:, 0, 1, 0], -0.5j / y))
        record("tricerri_christoffel_2_22", _relative(pkg.gamma[:, 1, 1, 1], 1j / y))
        record("tricerri_torsion_1_12", _relative(pkg.torsion[:, 0, 0, 1], 0.5j / y))
        record("tricerri_torsion_antisymmetry", float(np.max(np.abs(pkg.torsion + np.swapaxes(pkg.torsion, -1, -2)))))
        record("tricerri_curvature_22_22", _relative(pkg.curvature[:, 1, 1, 1, 1], -(1 + 3 * decay) / (8 * y**4)))
        record("tricerri_curvature_22_11", _relative(pkg.curvature[:, 1, 1, 0, 0], decay / (4 * y)))
        record("tricerri_dbar_torsion", _relative(cov.dbar_torsion[:, 1, 0, 0, 1], 0.25 / y**2))
        record("tricerri_nabla_torsion", _relative(cov.nabla_torsion[:, 1, 0, 0, 1], 0.25 / y**2))
        record("tricerri_nabla_rm", float(np.max(norms.nabla_curvature)))
        record("tricerri_nabla_bar_rm", float(np.max(norms.nabla_bar_curvature)))
        record("tricerri_dbar_dbar_torsion", float(np.max(norms.dbar_dbar_torsion)))
        record("tricerri_nabla_dbar_torsion", float(np.max(norms.nabla_dbar_torsion)))
        record("ricci_determinant_crosscheck", float(np.max(np.abs(pkg.ricci_form - pkg.ricci_from_det))))
        record("tricerri_curvature_bounded", float(np.max(norms.curvature)))

    n = len(pts)
    return [
        _check("tricerri_christoffel_1_21", "Gamma^1_21 = -i/(2 y2)", worst["tricerri_christoffel_1_21"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_christoffel_2_22", "Gamma^2_22 = i/y2", worst["tricerri_christoffel_2_22"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_torsion_1_12", "T^1_12 = i/(2 y2)", worst["tricerri_torsion_1_12"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_torsion_antisymmetry", "T^k_ij = -T^k_ji", worst["tricerri_torsion_antisymmetry"], 1e-12, n),
        _check("tricerri_curvature_22_22", "R_{2 2bar 2 2bar} = -(1+3e^-t)/(8 y2^4)", worst["tricerri_curvature_22_22"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_curvature_22_11", "R_{2 2bar 1 1bar} = e^-t/(4 y2)", worst["tricerri_curvature_22_11"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_dbar_torsion", "dbar_2 T^1_12 = 1/(4 y2^2)", worst["tricerri_dbar_torsion"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_nabla_torsion", "nabla_2 T^1_12 = 1/(4 y2^2)", worst["tricerri_nabla_torsion"], CLOSED_FORM_TOL, n, True),
        _check("tricerri_nabla_rm", "|nabla Rm| = 0", worst["tricerri_nabla_rm"], VANISHING_TOL, n),
        _check("tricerri_nabla_bar_rm", "|nabla-bar Rm| = 0", worst["tricerri_nabla_bar_rm"], VANISHING_TOL, n),
        _check("tricerri_dbar_dbar_torsion", "|nabla-bar nabla-bar T| = 0", worst["tricerri_dbar_dbar_torsion"], VANISHING_TOL, n),
        _check("tricerri_nabla_dbar_torsion", "|nabla nabla-bar T| = 0", worst["tricerri_nabla_dbar_torsion"], VANISHING_TOL, n),
        _check("ricci_determinant_crosscheck", "trace of Rm equals -ddbar log det g", worst["ricci_determinant_crosscheck"], CROSSCHECK_TOL, n),
        _check("tricerri_curvature_bounded", "|Rm| bounded over t", worst["tricerri_curvature_bounded"], BOUND_C, n),
    ]


def _splus_checks(surface: SPlusData, pts: np.ndarray, times: tuple[float, ...], diff: Differentiator) -> list[IdentityCheck]:
    m = surface.m_slope
    y = pts[:, 3]
    v = pts[:, 1] - m * np.log(y)
    worst: dict[str, float] = {}

    def record(key: str, value: float) -> None:
        worst[key] = max(worst.get(key, 0.0), value)

    for t in times:
        w = 1.0 + math.exp(t)
        field = omega_tilde(vaisman(m), alpha_prime(), t)
        pkg = chern_package(field, pts, diff)
        gamma, tors = pkg.gamma, pkg.torsion
        cov = covariant_derivatives(field, pts, diff)
        record("splus_christoffel_2_11", _relative(gamma[:, 1, 0, 0], 1j * y / w))
        record("splus_christoffel_2_12", _relative(gamma[:, 1, 0, 1], -1j * v / w))
        record("splus_christoffel_2_21", _relative(gamma[:, 1, 1, 0], -1j * (m + v) / w))
        record("splus_torsion_1_12", _relative(tors[:, 0, 0, 1], 0.5j / y + 1j * m * v / (y * w)))
        record("splus_torsion_2_12", _relative(tors[:, 1, 0, 1], np.full(y.shape, 1j * m / w)))
        record("splus_dbar1_torsion", _relative(cov.dbar_torsion[:, 0, 0, 0, 1], -m / (2 * y * w) + 0j))
        record(
            "splus_dbar2_torsion",
            _relative(cov.dbar_torsion[:, 1, 0, 0, 1], 0.25 / y**2 + m * (m + v) / (2 * y**2 * w) + 0j),
        )

    n = len(pts)
    names = {
        "splus_christoffel_2_11": "Gamma^2_11 = i y2/(1+e^t)",
        "splus_christoffel_2_12": "Gamma^2_12 = -i (y1 - m log y2)/(1+e^t)",
        "splus_christoffel_2_21": "Gamma^2_21 = -i (m + y1 - m log y2)/(1+e^t)",
        "splus_torsion_1_12": "T^1_12 = i/(2 y2) + i m (y1 - m log y2)/(y2 (1+e^t))",
        "splus_torsion_2_12": "T^2_12 = i m/(1+e^t)",
        "splus_dbar1_torsion": "dbar_1 T^1_12 = -m/(2 y2 (1+e^t))",
        "splus_dbar2_torsion": "dbar_2 T^1_12 = 1/(4 y2^2) + m (m + y1 - m log y2)/(2 y2^2 (1+e^t))",
    }
    return [_check(key, desc, worst[key], CLOSED_FORM_TOL, n, True) for key, desc in names.items()]


def verify_tensors(
    sm: SMData,
    splus: SPlusData,
    samples: int = 100,
    times: tuple[float, ...] = (0.0, 1.0, 5.0),
    residual_samples: int = 50,
    residual_times: tuple[float, ...] = (0.0, 1.0, 3.0, 6.0),
    seed: int = 42,
    diff: Differentiator | None = None,
    progress: Callable[[str], None] | None = None,
) -> TensorReport:
    diff = diff or default_differentiator()
    rng = np.random.default_rng(seed)
    sm_pts = sm.domain.sample(samples, rng)
    sp_pts = splus.domain.sample(samples, rng)
    checks: list[IdentityCheck] = []

    def note(stage: str) -> None:
        if progress:
            progress(stage)

    note("tricerri")
    checks += _tricerri_checks(sm_pts, times, diff)

    note("splus")
    checks += _splus_checks(splus, sp_pts, times, diff)

    note("ricci")
    ric_t, _ = chern_ricci(tricerri(), sm_pts, diff)
    checks.append(_check("ricci_tricerri", "Ric(omega_T) = -alpha", float(np.max(np.abs(ric_t + alpha().matrix(sm_pts)))), RICCI_TOL, samples))
    ric_v, _ = chern_ricci(vaisman(splus.m_slope), sp_pts, diff)
    checks.append(_check("ricci_vaisman", "Ric(omega_V) = -alpha'", float(np.max(np.abs(ric_v + alpha_prime().matrix(sp_pts)))), RICCI_TOL, samples))

    note("explicit")
    sm_res = sm_pts[:residual_samples]
    sp_res = sp_pts[:residual_samples]
    worst_sm = max(ncrf_residual(explicit_solution(SurfaceKind.SM, t), sm_res, diff) for t in residual_times)
    worst_sp = max(ncrf_residual(explicit_solution(SurfaceKind.SPLUS, t, splus.m_slope), sp_res, diff) for t in residual_times)
    checks.append(_check("explicit_residual_sm", "d/dt w + Ric(w) + w = 0 for e^-t beta + (1+3e^-t) alpha", worst_sm, VANISHING_TOL, residual_samples))
    checks.append(_check("explicit_residual_splus", "d/dt w + Ric(w) + w = 0 for e^-t gamma + (1+e^-t) alpha'", worst_sp, VANISHING_TOL, residual_samples))

    note("forms")
    checks.append(_check("alpha_closed", "d alpha = 0", exterior_derivative_norm(alpha(), sm_pts, diff), CLOSEDNESS_TOL, samples))
    checks.append(_check("alpha_prime_closed", "d alpha' = 0", exterior_derivative_norm(alpha_prime(), sp_pts, diff), CLOSEDNESS_TOL, samples))
    witness = np.array([[0.0, 0.0, 0.0, 1.0]])
    d_beta = exterior_derivative_norm(beta(), witness, diff)
    checks.append(_check("beta_not_closed", "|d beta| > 0.1 at y2 = 1 (reported as 0.1/|d beta|)", 0.1 / max(d_beta, 1e-300), 1.0, 1))

    for kind, lf, pts in ((SurfaceKind.SM, tricerri(), sm_pts), (SurfaceKind.SPLUS, vaisman(splus.m_slope), sp_pts)):
        density = volume_density(lf, kind, pts)
        checks.append(
            _check(
                f"volume_density_{kind.value}",
                "sqrt(-1) ddbar log Omega equals the base form",
                density.curvature_residual(pts[:residual_samples], diff),
                CLOSEDNESS_TOL,
                residual_samples,
            )
        )

    note("bounds")
    worst_alpha = 0.0
    for t in range(0, 11):
        field = omega_tilde(vaisman(splus.m_slope), alpha_prime(), float(t))
        nabla = form_covariant_derivative(field, alpha_prime(), sp_res, diff)
        g = field.matrix(sp_res)
        worst_alpha = max(worst_alpha, float(np.max(contract_norm(nabla, "hha", g, inverse_metric(g)))))
    checks.append(_check("vaisman_nabla_alpha_prime_bounded", "|nabla alpha'| <= C over t in 0..10", worst_alpha, BOUND_C, residual_samples))

    lf = inhomogeneous_lf(sm)
    growth: list[float] = []
    for t in (0.0, 2.0, 5.0, 10.0):
        field = omega_tilde(lf, alpha(), t)
        pkg = chern_package(field, sm_pts[:20], diff)
        growth.append(float(np.max(contract_norm(pkg.curvature, "haha", pkg.g, pkg.ginv))) * math.exp(-t / 2))
    ratio = max(growth) / max(growth[0], 1e-300)
    checks.append(_check("inhomogeneous_curvature_growth", "sup |Rm| e^{-t/2} relative to |Rm| at t = 0", ratio, BOUND_C, 20, True))

    return TensorReport(surface=f"{sm.kind.value}+{splus.kind.value}", times=list(times), checks=checks)
