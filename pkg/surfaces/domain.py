from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.exceptions import NonConvergent
from core.types import SurfaceKind

from .construct import SMData, SPlusData, SurfaceData
from .group import GroupElement, apply_group, from_complex, to_complex

_TOL = 1e-12


@dataclass(frozen=True)
class ReducedPoints:
    points: np.ndarray
    chart: np.ndarray
    f0_power: np.ndarray


class FundamentalDomain:
    """Box y2 in [1, scale) times the unit cube of fiber chart coordinates.

    Chart coordinates are (q1, q2, q3, u) with u = log y2. For S_M the fiber
    part is q = V^-1 (x1, y1, x2) with V the lattice matrix; for S+ it is
    (P^-1 (x2, y1/y2), x1/kappa).
    """

    def __init__(self, surface: SurfaceData, cap: int = 64) -> None:
        self.surface = surface
        self.cap = cap
        self.period = surface.period
        self.y2_range = (1.0, surface.scale)
        if isinstance(surface, SMData):
            self.basis = surface.lattice
        else:
            self.basis = np.array([[surface.a[0], surface.a[1]], [surface.b[0], surface.b[1]]])
        self.basis_inv = np.linalg.inv(self.basis)

    @property
    def kind(self) -> SurfaceKind:
        return self.surface.kind

    def chart(self, pt: np.ndarray) -> np.ndarray:
        pt = np.asarray(pt, dtype=float)
        u = np.log(pt[..., 3])
        if self.kind is SurfaceKind.SM:
            fiber = pt[..., :3] @ self.basis_inv.T
            return np.concatenate([fiber, u[..., None]], axis=-1)
        stacked = np.stack([pt[..., 2], pt[..., 1] / pt[..., 3]], axis=-1)
        sigma = stacked @ self.basis_inv.T
        q3 = pt[..., 0] / self.surface.kappa
        return np.concatenate([sigma, q3[..., None], u[..., None]], axis=-1)

    def cover(self, chart: np.ndarray) -> np.ndarray:
        chart = np.asarray(chart, dtype=float)
        y2 = np.exp(chart[..., 3])
        if self.kind is SurfaceKind.SM:
            fiber = chart[..., :3] @ self.basis.T
            return np.concatenate([fiber, y2[..., None]], axis=-1)
        mixed = chart[..., :2] @ self.basis.T
        x1 = chart[..., 2] * self.surface.kappa
        return np.stack([x1, mixed[..., 1] * y2, mixed[..., 0], y2], axis=-1)

    def contains(self, pt: np.ndarray, tol: float = _TOL) -> np.ndarray:
        chart = self.chart(pt)
        u_ok = (chart[..., 3] >= -tol * self.period) & (chart[..., 3] < self.period * (1 + tol))
        fiber_ok = np.all((chart[..., :3] >= -tol) & (chart[..., :3] < 1 + tol), axis=-1)
        return u_ok & fiber_ok

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        chart = rng.random((n, 4))
        chart[:, 3] *= self.period
        return self.cover(chart)

    def _step(self, pt: np.ndarray) -> GroupElement:
        surface = self.surface
        chart = self.chart(pt)
        k = int(np.floor(chart[3] / self.period + _TOL))
        if k != 0:
            return GroupElement.generator(surface, 0, -k)
        shifts = np.floor(chart[:3] + _TOL).astype(int)
        if self.kind is SurfaceKind.SM:
            g = GroupElement.identity()
            for j in range(3):
                g = g.compose(GroupElement.generator(surface, j + 1, -int(shifts[j])))
            return g
        if shifts[0] or shifts[1]:
            # f2 acts first, then f1
            return GroupElement.generator(surface, 1, -int(shifts[0])).compose(
                GroupElement.generator(surface, 2, -int(shifts[1]))
            )
        return GroupElement.generator(surface, 3, -int(shifts[2]))

    def reduce_to_domain(self, pt: np.ndarray) -> tuple[np.ndarray, GroupElement]:
        current = np.asarray(pt, dtype=float)
        total = GroupElement.identity()
        for _ in range(self.cap):
            if bool(self.contains(current)):
                return current, total
            step = self._step(current)
            current = apply_group(step, current)
            total = step.compose(total)
        raise NonConvergent(
            "reduction did not reach the fundamental domain",
            {"point": np.asarray(pt).tolist(), "cap": self.cap, "last": current.tolist()},
        )

    def reduce_array(self, pt: np.ndarray, snap: float = _TOL, fiber_snap: float | None = None) -> ReducedPoints:
        """Vectorized reduction; returns reduced points, their chart and the f0 exponent applied.

        ``snap`` shifts the cut in u, ``fiber_snap`` (default ``snap``) the cuts of the fiber chart,
        so points within the snap distance below a cut land at its start.
        """
        fiber_snap = snap if fiber_snap is None else fiber_snap
        surface = self.surface
        pt = np.asarray(pt, dtype=float)
        z1, z2 = to_complex(pt)
        u = np.log(pt[..., 3])
        k = np.floor(u / self.period + snap)
        if isinstance(surface, SMData):
            z1 = z1 * surface.mu ** (-k)
            z2 = z2 * surface.lam ** (-k)
            chart = self.chart(from_complex(z1, z2))
            chart[..., :3] -= np.floor(chart[..., :3] + fiber_snap)
        else:
            assert isinstance(surface, SPlusData)
            z1 = z1 - k * surface.tau
            z2 = z2 * surface.alpha_ev ** (-k)
            chart = self.chart(from_complex(z1, z2))
            n = np.floor(chart[..., :2] + fiber_snap)
            for j in (1, 0):
                p = -n[..., j]
                aj, bj, cj = surface.a[j], surface.b[j], surface.c[j]
                z1 = z1 + p * bj * z2 + p * cj + 0.5 * p * (p - 1) * aj * bj
                z2 = z2 + p * aj
            chart = self.chart(from_complex(z1, z2))
            chart[..., 2] -= np.floor(chart[..., 2] + fiber_snap)
        chart[..., 3] = u - k * self.period
        return ReducedPoints(points=self.cover(chart), chart=chart, f0_power=k.astype(np.int64))


def reduce_to_domain(surface: SurfaceData, pt: np.ndarray) -> tuple[np.ndarray, GroupElement]:
    return surface.domain.reduce_to_domain(pt)
