from __future__ import annotations

import numpy as np
import pytest

from core.exceptions import NotStronglyFlat
from core.types import SurfaceKind
from geometry.fields import MetricField, stack_components
from reference.flatness import conformal_flatten, is_strongly_flat, volume_density, wedge_density
from reference.forms import alpha, beta, tricerri, vaisman


def test_reference_metrics_are_strongly_flat(sm_surface, splus_surface, rng):
    assert is_strongly_flat(tricerri(), SurfaceKind.SM) == pytest.approx(1.0)
    pts = splus_surface.domain.sample(32, rng)
    assert is_strongly_flat(vaisman(splus_surface.m_slope), SurfaceKind.SPLUS, pts) == pytest.approx(1.0)


def test_leafwise_varying_metric_is_not_strongly_flat():
    def evaluator(x):
        zeros = np.zeros_like(x[..., 3])
        return stack_components(x[..., 3] * (2.0 + np.sin(x[..., 1])), 1.0 / x[..., 3] ** 2, zeros, zeros)

    bumpy = MetricField(name="bumpy", evaluator=evaluator)
    with pytest.raises(NotStronglyFlat) as info:
        is_strongly_flat(bumpy, SurfaceKind.SM)
    assert info.value.diagnostics["relative_spread"] > 1e-8


def test_conformal_flatten_removes_constant_factor(sm_surface, rng):
    pts = sm_surface.domain.sample(10, rng)
    sigma, flat = conformal_flatten(tricerri().scaled(2.0), SurfaceKind.SM, pts)
    assert np.allclose(sigma(pts), -np.log(2.0))
    assert np.allclose(flat.matrix(pts), tricerri().matrix(pts))


def test_volume_density_is_a_curvature_potential(sm_surface, rng, diff):
    pts = sm_surface.domain.sample(10, rng)
    density = volume_density(tricerri(), SurfaceKind.SM, pts)
    assert density.c == pytest.approx(1.0)
    # Omega = 2 alpha ^ beta = 1/(2 y2)
    assert np.allclose(density.density(pts), 0.5 / pts[:, 3])
    assert np.allclose(wedge_density(alpha(), beta(), pts), 0.25 / pts[:, 3])
    assert density.curvature_residual(pts, diff) < 1e-6
