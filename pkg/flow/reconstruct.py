from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import map_coordinates

from geometry.fields import MetricField, disassemble
from reference.forms import base_form, omega_tilde
from surfaces.construct import SMData

from .grids import EquivariantGrid, FlowGrid, ReducedGrid
from .runner import Snapshot

_PAD = 3


def _reduced_hessian(grid: ReducedGrid, phi: np.ndarray):
    psi = grid.psi(phi)
    nodes = np.append(grid.u, grid.period)
    spline = CubicSpline(nodes, np.append(psi, psi[0]), bc_type="periodic")
    period = grid.period

    def evaluator(x: np.ndarray) -> np.ndarray:
        y2 = x[..., 3]
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 1] = spline(np.mod(np.log(y2), period)) / (4.0 * y2**2)
        return out

    return evaluator


def _padded_layers(grid: EquivariantGrid, values: np.ndarray) -> np.ndarray:
    """Complex (N, 2, 2) node values -> (4, n, n, n, n_u + 2 PAD) real component blocks, padded across the seam."""
    surface = grid.surface
    assert isinstance(surface, SMData)
    jac = np.array([surface.mu, surface.lam])
    factor = jac[:, None] * np.conj(jac)[None, :]
    n, n_u = grid.n, grid.n_u
    blocks = []
    for k in range(-_PAD, n_u + _PAD):
        layer = k % n_u
        shift = (k - layer) // n_u
        index = grid.neighbor((0, 0, 0, k))[grid.layer_index == 0]
        mats = values[index]
        if shift:
            mats = mats * factor[None] ** (-shift)
        blocks.append(disassemble(mats).reshape(n, n, n, 4))
    stacked = np.stack(blocks, axis=3)
    return np.moveaxis(stacked, -1, 0)


def _full_hessian(grid: EquivariantGrid, phi: np.ndarray):
    surface = grid.surface
    assert isinstance(surface, SMData)
    padded = _padded_layers(grid, grid.complex_hessian(phi))
    domain = surface.domain
    n, n_u = grid.n, grid.n_u

    def evaluator(x: np.ndarray) -> np.ndarray:
        flat = np.asarray(x, dtype=float).reshape(-1, 4)
        reduced = domain.reduce_array(flat)
        coords = np.empty((4, flat.shape[0]))
        coords[:3] = (reduced.chart[:, :3] * n).T
        coords[3] = reduced.chart[:, 3] / grid.steps[3] + _PAD
        comps = np.stack(
            [map_coordinates(padded[c], coords, order=3, mode="grid-wrap") for c in range(4)],
            axis=-1,
        )
        k = reduced.f0_power
        h12 = comps[:, 2] + 1j * comps[:, 3]
        lam_k = surface.lam ** (-k.astype(float))
        mu_k = surface.mu ** (-k.astype(float))
        out = np.stack(
            [
                comps[:, 0] * np.abs(mu_k) ** 2,
                comps[:, 1] * lam_k**2,
                (h12 * mu_k * lam_k).real,
                (h12 * mu_k * lam_k).imag,
            ],
            axis=-1,
        )
        return out.reshape(np.shape(x)[:-1] + (4,))

    return evaluator


def reconstruct_metric(grid: FlowGrid, snapshot: Snapshot) -> MetricField:
    """omega~(t) in closed form plus the interpolated grid Hessian of phi."""
    surface = grid.surface
    background = omega_tilde(grid.lf, base_form(surface.kind), snapshot.t)
    if not np.any(snapshot.phi - snapshot.phi[0]):
        return background.renamed(f"omega(t={snapshot.t:g})")
    if isinstance(grid, ReducedGrid):
        hessian = _reduced_hessian(grid, snapshot.phi)
    elif isinstance(grid, EquivariantGrid):
        hessian = _full_hessian(grid, snapshot.phi)
    else:
        raise TypeError(f"unsupported grid {type(grid).__name__}")
    base_eval = background.evaluator

    def evaluator(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return base_eval(x) + hessian(x)

    return MetricField(
        name=f"omega(t={snapshot.t:g})",
        evaluator=evaluator,
        analytic=False,
        t=snapshot.t,
        surface=surface,
    )
