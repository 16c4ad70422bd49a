from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.exceptions import SingularMetric

from .differentiation import (
    ANTIHOLOMORPHIC,
    HOLOMORPHIC,
    Differentiator,
    antiholomorphic,
    default_differentiator,
    holomorphic,
)
from .fields import MetricField, ScalarField, assemble, require_positive

_HERMITIAN_TOL = 1e-6


def inverse_metric(g: np.ndarray) -> np.ndarray:
    """g^{i jbar} as ginv[i, j] = inv(g).T."""
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    if np.any(np.abs(det) == 0):
        raise SingularMetric("metric is not invertible")
    inv = np.empty_like(g)
    inv[..., 0, 0] = g[..., 1, 1] / det
    inv[..., 1, 1] = g[..., 0, 0] / det
    inv[..., 0, 1] = -g[..., 0, 1] / det
    inv[..., 1, 0] = -g[..., 1, 0] / det
    return np.swapaxes(inv, -1, -2)


def _stencil_check(field: MetricField, x: np.ndarray, h: float) -> None:
    x = np.asarray(x, dtype=float)
    eye = np.eye(4) * h
    offsets = np.concatenate([eye, -eye, np.zeros((1, 4))])
    pts = x[None, ...] + offsets.reshape((9,) + (1,) * (x.ndim - 1) + (4,))
    require_positive(field.components(pts), pts, field.name)


def holomorphic_gradient(field: MetricField, x: np.ndarray, diff: Differentiator | None = None) -> np.ndarray:
    """d_k g_{i jbar} indexed [..., k, i, j]."""
    diff = diff or default_differentiator()
    d_real = assemble(np.moveaxis(diff.first(field.components, np.asarray(x, dtype=float), analytic=field.analytic), -2, -1))
    return np.einsum("ka,...aij->...kij", HOLOMORPHIC, d_real)


@dataclass(frozen=True)
class MetricJet:
    g: np.ndarray
    dg: np.ndarray
    dbar_g: np.ndarray
    ddbar_g: np.ndarray | None


def metric_jet(field: MetricField, x: np.ndarray, diff: Differentiator | None = None, order: int = 2) -> MetricJet:
    """g, d_k g_{i jbar} as [k, i, j], dbar_k g as [k, i, j] and d_i dbar_j g_{k lbar} as [i, j, k, l]."""
    diff = diff or default_differentiator()
    x = np.asarray(x, dtype=float)
    _stencil_check(field, x, diff.outer_step if order >= 2 else diff.step)
    g = field.matrix(x)

    def first(y: np.ndarray) -> np.ndarray:
        return diff.first(field.components, y, analytic=field.analytic)

    d_real = assemble(np.moveaxis(first(x), -2, -1))
    dg = np.einsum("ka,...aij->...kij", HOLOMORPHIC, d_real)
    dbar_g = np.einsum("ka,...aij->...kij", ANTIHOLOMORPHIC, d_real)
    ddbar = None
    if order >= 2:
        dd_real = assemble(np.moveaxis(diff.outer(first, x), -3, -1))
        ddbar = np.einsum("ia,jb,...abkl->...ijkl", HOLOMORPHIC, ANTIHOLOMORPHIC, dd_real)
    return MetricJet(g=g, dg=dg, dbar_g=dbar_g, ddbar_g=ddbar)


def ddbar_scalar(f: ScalarField, x: np.ndarray, diff: Differentiator | None = None) -> np.ndarray:
    """d_i dbar_j f as [..., i, j]."""
    diff = diff or default_differentiator()

    def first(y: np.ndarray) -> np.ndarray:
        return diff.first(f, y, analytic=f.analytic)

    dd = diff.outer(first, np.asarray(x, dtype=float))
    return np.einsum("ia,jb,...ab->...ij", HOLOMORPHIC, ANTIHOLOMORPHIC, dd)


def _log_det(field: MetricField) -> ScalarField:
    ev = field.evaluator

    def evaluator(x: np.ndarray) -> np.ndarray:
        c = ev(x)
        return np.log(c[..., 0] * c[..., 1] - c[..., 2] ** 2 - c[..., 3] ** 2)

    return ScalarField(name=f"logdet({field.name})", evaluator=evaluator, analytic=field.analytic)


def _christoffel_from_jet(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    return np.einsum("...pq,...ikq->...pik", ginv, dg)


def _curvature_from_jet(ginv: np.ndarray, jet: MetricJet) -> np.ndarray:
    return -jet.ddbar_g + np.einsum("...pq,...ikq,...jpl->...ijkl", ginv, jet.dg, jet.dbar_g)


def hermitian_defect(curv: np.ndarray) -> float:
    mirrored = np.conj(np.swapaxes(np.swapaxes(curv, -4, -3), -2, -1))
    return float(np.max(np.abs(curv - mirrored))) if curv.size else 0.0


def _symmetrize(curv: np.ndarray) -> np.ndarray:
    mirrored = np.conj(np.swapaxes(np.swapaxes(curv, -4, -3), -2, -1))
    return 0.5 * (curv + mirrored)


@dataclass(frozen=True)
class ChernPackage:
    point: np.ndarray
    t: float | None
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    torsion: np.ndarray
    torsion_lower: np.ndarray
    curvature: np.ndarray
    ricci_form: np.ndarray
    ricci_from_det: np.ndarray
    scalar: np.ndarray
    hermitian_defect: float


def chern_package(field: MetricField, x: np.ndarray, diff: Differentiator | None = None) -> ChernPackage:
    diff = diff or default_differentiator()
    x = np.asarray(x, dtype=float)
    jet = metric_jet(field, x, diff, order=2)
    ginv = inverse_metric(jet.g)
    gamma = _christoffel_from_jet(ginv, jet.dg)
    curv = _curvature_from_jet(ginv, jet)
    defect = hermitian_defect(curv)
    scale = max(float(np.max(np.abs(curv))) if curv.size else 0.0, 1.0)
    if defect > _HERMITIAN_TOL * scale:
        raise SingularMetric(
            "curvature lost Hermitian symmetry beyond tolerance",
            {"metric": field.name, "defect": defect},
        )
    curv = _symmetrize(curv)
    ricci = np.einsum("...kl,...ijkl->...ij", ginv, curv)
    ricci_det = -ddbar_scalar(_log_det(field), x, diff)
    scalar = np.einsum("...ij,...ij->...", ginv, ricci).real
    return ChernPackage(
        point=x,
        t=field.t,
        g=jet.g,
        ginv=ginv,
        gamma=gamma,
        torsion=gamma - np.swapaxes(gamma, -1, -2),
        torsion_lower=jet.dg - np.swapaxes(jet.dg, -3, -2),
        curvature=curv,
        ricci_form=ricci,
        ricci_from_det=ricci_det,
        scalar=scalar,
        hermitian_defect=defect,
    )


def christoffel(field: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> np.ndarray:
    jet = metric_jet(field, pt, diff, order=1)
    return _christoffel_from_jet(inverse_metric(jet.g), jet.dg)


def torsion(field: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> tuple[np.ndarray, np.ndarray]:
    jet = metric_jet(field, pt, diff, order=1)
    gamma = _christoffel_from_jet(inverse_metric(jet.g), jet.dg)
    return gamma - np.swapaxes(gamma, -1, -2), jet.dg - np.swapaxes(jet.dg, -3, -2)


def curvature(field: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> np.ndarray:
    jet = metric_jet(field, pt, diff, order=2)
    return _symmetrize(_curvature_from_jet(inverse_metric(jet.g), jet))


def chern_ricci(field: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Ric = -ddbar log det g and the scalar curvature g^{i jbar} Ric_{i jbar}."""
    diff = diff or default_differentiator()
    pt = np.asarray(pt, dtype=float)
    _stencil_check(field, pt, diff.outer_step)
    ricci = -ddbar_scalar(_log_det(field), pt, diff)
    ginv = inverse_metric(field.matrix(pt))
    return ricci, np.einsum("...ij,...ij->...", ginv, ricci).real


def trace(omega1: MetricField, omega2: MetricField, pt: np.ndarray) -> np.ndarray:
    """tr_{omega2} omega1 = g2^{i jbar} (g1)_{i jbar}."""
    pt = np.asarray(pt, dtype=float)
    omega2.check_positive(pt)
    return trace_matrices(omega1.matrix(pt), omega2.matrix(pt))


def trace_matrices(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", inverse_metric(g2), g1).real


def exterior_derivative_norm(field: MetricField, pts: np.ndarray, diff: Differentiator | None = None) -> float:
    """max |d_k g_{i jbar} - d_i g_{k jbar}| over samples; zero iff the (1,1)-form is closed."""
    dg = holomorphic_gradient(field, pts, diff)
    return float(np.max(np.abs(dg - np.swapaxes(dg, -3, -2))))


@dataclass(frozen=True)
class CovariantDerivatives:
    nabla_torsion: np.ndarray
    dbar_torsion: np.ndarray
    nabla_dbar_torsion: np.ndarray
    dbar_dbar_torsion: np.ndarray
    nabla_curvature: np.ndarray
    nabla_bar_curvature: np.ndarray


def _last_to(d: np.ndarray, rank: int) -> np.ndarray:
    """Move the trailing derivative index in front of a rank-``rank`` tensor."""
    return np.moveaxis(d, -1, -(rank + 1))


def covariant_derivatives(field: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> CovariantDerivatives:
    diff = diff or default_differentiator()
    pt = np.asarray(pt, dtype=float)
    _stencil_check(field, pt, diff.third_step + diff.outer_step)

    def torsion_up(y: np.ndarray) -> np.ndarray:
        return torsion(field, y, diff)[0]

    def dbar_torsion(y: np.ndarray) -> np.ndarray:
        return _last_to(antiholomorphic(diff.outer(torsion_up, y)), 3)

    def curvature_at(y: np.ndarray) -> np.ndarray:
        jet = metric_jet(field, y, diff, order=2)
        return _curvature_from_jet(inverse_metric(jet.g), jet)

    gamma = christoffel(field, pt, diff)
    gamma_bar = np.conj(gamma)
    tors = torsion_up(pt)
    curv = _symmetrize(curvature_at(pt))

    d_tors = diff.outer(torsion_up, pt)
    dT = _last_to(holomorphic(d_tors), 3)
    A = _last_to(antiholomorphic(d_tors), 3)

    nabla_T = (
        dT
        + np.einsum("...kmr,...rij->...mkij", gamma, tors)
        - np.einsum("...rmi,...krj->...mkij", gamma, tors)
        - np.einsum("...rmj,...kir->...mkij", gamma, tors)
    )

    dA = diff.outer(dbar_torsion, pt, level=3)
    dbar_dbar_T = _last_to(antiholomorphic(dA), 4) - np.einsum("...rpq,...rkij->...pqkij", gamma_bar, A)
    nabla_dbar_T = (
        _last_to(holomorphic(dA), 4)
        + np.einsum("...kmr,...qrij->...mqkij", gamma, A)
        - np.einsum("...rmi,...qkrj->...mqkij", gamma, A)
        - np.einsum("...rmj,...qkir->...mqkij", gamma, A)
    )

    dR = diff.outer(curvature_at, pt, level=3)
    nabla_R = (
        _last_to(holomorphic(dR), 4)
        - np.einsum("...rmi,...rjkl->...mijkl", gamma, curv)
        - np.einsum("...rmk,...ijrl->...mijkl", gamma, curv)
    )
    nabla_bar_R = (
        _last_to(antiholomorphic(dR), 4)
        - np.einsum("...rmj,...irkl->...mijkl", gamma_bar, curv)
        - np.einsum("...rml,...ijkr->...mijkl", gamma_bar, curv)
    )
    return CovariantDerivatives(
        nabla_torsion=nabla_T,
        dbar_torsion=A,
        nabla_dbar_torsion=nabla_dbar_T,
        dbar_dbar_torsion=dbar_dbar_T,
        nabla_curvature=nabla_R,
        nabla_bar_curvature=nabla_bar_R,
    )


def form_covariant_derivative(field: MetricField, form: MetricField, pt: np.ndarray, diff: Differentiator | None = None) -> np.ndarray:
    """nabla_m a_{k lbar} = d_m a_{k lbar} - Gamma^r_{mk} a_{r lbar}, indexed [m, k, l]."""
    diff = diff or default_differentiator()
    pt = np.asarray(pt, dtype=float)
    gamma = christoffel(field, pt, diff)
    d_form = holomorphic_gradient(form, pt, diff)
    return d_form - np.einsum("...rmk,...rl->...mkl", gamma, form.matrix(pt))
