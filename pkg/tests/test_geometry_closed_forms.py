from __future__ import annotations

import math

import numpy as np
import pytest

from core.exceptions import BadKind, SingularMetric
from core.types import SurfaceKind
from geometry.chern import chern_package, chern_ricci, christoffel, exterior_derivative_norm, trace
from geometry.differentiation import DifferentiationMethod, Differentiator
from geometry.norms import contract_norm
from geometry.verification import ncrf_residual, verify_tensors
from reference.forms import alpha, alpha_prime, beta, eval_form, explicit_solution, get_form, omega_tilde, tricerri


@pytest.fixture()
def sm_points(sm_surface, rng):
    return sm_surface.domain.sample(16, rng)


def test_tricerri_christoffel_and_torsion(sm_points, diff):
    y = sm_points[:, 3]
    gamma = christoffel(tricerri(), sm_points, diff)
    assert np.allclose(gamma[:, 0, 1, 0], -0.5j / y, rtol=1e-7, atol=0)
    assert np.allclose(gamma[:, 1, 1, 1], 1j / y, rtol=1e-7, atol=0)
    torsion = gamma - np.swapaxes(gamma, -1, -2)
    assert np.allclose(torsion[:, 0, 0, 1], 0.5j / y, rtol=1e-7, atol=0)


def test_tricerri_ricci_is_minus_alpha(sm_points, diff):
    ricci, scalar = chern_ricci(tricerri(), sm_points, diff)
    assert np.max(np.abs(ricci + alpha().matrix(sm_points))) < 1e-6
    # tr_{omega_T} alpha = 1/4
    assert np.allclose(scalar, -0.25, atol=1e-6)
    assert np.allclose(trace(alpha(), tricerri(), sm_points), 0.25)


def test_trace_accepts_semidefinite_form_against_metric(sm_points):
    # alpha is only semi-definite; tr_{omega_T} alpha = 1/4 in closed form
    assert np.allclose(trace(alpha(), tricerri(), sm_points), 0.25, atol=1e-12)
    with pytest.raises(SingularMetric):
        trace(tricerri(), alpha(), sm_points)


def test_curvature_closed_form_along_reference_path(sm_points, diff):
    y = sm_points[:, 3]
    for t in (0.0, 2.0):
        decay = math.exp(-t)
        pkg = chern_package(omega_tilde(tricerri(), alpha(), t), sm_points, diff)
        expected = -(1 + 3 * decay) / (8 * y**4)
        assert np.allclose(pkg.curvature[:, 1, 1, 1, 1].real, expected, rtol=1e-6, atol=0)
        assert np.max(np.abs(pkg.ricci_form - pkg.ricci_from_det)) < 1e-7
        norm = contract_norm(pkg.torsion_lower, "hha", pkg.g, pkg.ginv)
        assert np.all(np.isfinite(norm))


def test_explicit_solutions_solve_the_flow(sm_surface, splus_surface, rng, diff):
    sm_pts = sm_surface.domain.sample(8, rng)
    sp_pts = splus_surface.domain.sample(8, rng)
    for t in (0.0, 1.5, 4.0):
        assert ncrf_residual(explicit_solution(SurfaceKind.SM, t), sm_pts, diff) < 1e-6
        assert ncrf_residual(explicit_solution(SurfaceKind.SPLUS, t, splus_surface.m_slope), sp_pts, diff) < 1e-6


def test_closedness_of_base_forms(sm_points, diff):
    assert exterior_derivative_norm(alpha(), sm_points, diff) < 1e-8
    assert exterior_derivative_norm(alpha_prime(), sm_points, diff) < 1e-8
    assert exterior_derivative_norm(beta(), np.array([[0.0, 0.0, 0.0, 1.0]]), diff) > 0.1


def test_differentiation_methods_agree(sm_points):
    field = tricerri()
    exact = Differentiator(method=DifferentiationMethod.COMPLEX_STEP).first(field.components, sm_points, analytic=True)
    central = Differentiator(step=1e-3, method=DifferentiationMethod.CENTRAL).first(field.components, sm_points)
    richardson = Differentiator(step=1e-2, method=DifferentiationMethod.RICHARDSON).first(field.components, sm_points)
    assert np.allclose(central, exact, atol=1e-5)
    assert np.allclose(richardson, exact, atol=1e-6)


def test_form_registry_and_explicit_start(sm_points):
    start = eval_form("explicit-sm", sm_points, t=0.0)
    assert np.allclose(start, tricerri().matrix(sm_points))
    assert np.allclose(eval_form("omega_infinity", sm_points), alpha().matrix(sm_points))
    with pytest.raises(BadKind):
        get_form("kahler")


def test_negative_metric_is_rejected(sm_points, diff):
    flipped = tricerri().scaled(-1.0)
    with pytest.raises(SingularMetric):
        flipped.check_positive(sm_points)
    with pytest.raises(SingularMetric):
        chern_ricci(flipped, sm_points, diff)


def test_verify_tensors_report_passes(sm_surface, splus_surface, diff):
    report = verify_tensors(
        sm_surface,
        splus_surface,
        samples=8,
        times=(0.0, 1.0),
        residual_samples=4,
        residual_times=(0.0, 2.0),
        seed=3,
        diff=diff,
    )
    failed = [c.name for c in report.checks if not c.passed]
    assert not failed
    names = {c.name for c in report.checks}
    assert {"ricci_tricerri", "explicit_residual_sm", "beta_not_closed", "volume_density_splus"} <= names
