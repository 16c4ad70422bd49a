from __future__ import annotations

import math
from typing import Any

import numpy as np

from core.exceptions import BadKind, Disconnected, InvalidInitialData, PositivityLoss
from core.types import SurfaceKind
from geometry.chern import inverse_metric
from geometry.differentiation import ANTIHOLOMORPHIC, HOLOMORPHIC
from reference.flatness import VolumeDensity
from reference.forms import base_form, tricerri, vaisman
from surfaces.construct import SMData, SPlusData, SurfaceData

from .expressions import InitialData

INVARIANCE_TOL = 1e-9


def leaf_metric(surface: SurfaceData, leaf_scale: float = 1.0):
    lf = tricerri() if surface.kind is SurfaceKind.SM else vaisman(getattr(surface, "m_slope", 1.0))
    return lf if leaf_scale == 1.0 else lf.scaled(leaf_scale)


class FlowGrid:
    """Nodes of a quotient grid together with the background data of the flow.

    Subclasses provide the complex Hessian and gradient of grid functions;
    everything else (metric, Monge-Ampere argument, curvature) is assembled here.
    """

    surface: SurfaceData
    leaf_scale: float
    nodes: np.ndarray

    def _setup_background(self) -> None:
        self.lf = leaf_metric(self.surface, self.leaf_scale)
        self.base = base_form(self.surface.kind)
        self._lf_mat = self.lf.matrix(self.nodes)
        self._base_mat = self.base.matrix(self.nodes)
        self.density = VolumeDensity(c=self.leaf_scale, kind=self.surface.kind, lf=self.lf).density(self.nodes)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def kind(self) -> SurfaceKind:
        return self.surface.kind

    def background(self, t: float) -> np.ndarray:
        decay = math.exp(-t)
        return decay * self._lf_mat + (1.0 - decay) * self._base_mat

    def background_rate(self, t: float) -> np.ndarray:
        return -math.exp(-t) * (self._lf_mat - self._base_mat)

    def complex_hessian(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def complex_gradient(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def environment(self, points: np.ndarray) -> dict[str, Any]:
        raise NotImplementedError

    def location(self, index: int) -> dict[str, Any]:
        raise NotImplementedError

    def metric(self, phi: np.ndarray, t: float) -> np.ndarray:
        return self.background(t) + self.complex_hessian(phi)

    def minors(self, phi: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        g = self.metric(phi, t)
        det = (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]).real
        return g[:, 0, 0].real, det

    def determinant_argument(self, phi: np.ndarray, t: float) -> np.ndarray:
        """e^t (omega~ + i ddbar phi)^2 / Omega at the nodes, with omega^2 = 2 det g."""
        _, det = self.minors(phi, t)
        return math.exp(t) * 2.0 * det / self.density

    def argument(self, phi: np.ndarray, t: float) -> np.ndarray:
        return self.determinant_argument(phi, t)

    def check_positive(self, phi: np.ndarray, t: float) -> None:
        g11, det = self.minors(phi, t)
        bad = ~((g11 > 0) & (det > 0))
        if np.any(bad):
            index = int(np.argmax(bad))
            raise PositivityLoss(
                "omega~ + i ddbar phi is not positive definite",
                {"t": t, "g11": float(g11[index]), "det": float(det[index]), **self.location(index)},
            )

    def rhs(self, phi: np.ndarray, t: float) -> np.ndarray:
        return self.log_argument(self.argument(phi, t), phi, t)

    def log_argument(self, arg: np.ndarray, phi: np.ndarray, t: float) -> np.ndarray:
        bad = ~(arg > 0)
        if np.any(bad):
            index = int(np.argmax(bad))
            raise PositivityLoss(
                "Monge-Ampere argument is not positive",
                {"t": t, "argument": float(arg[index]), **self.location(index)},
            )
        return np.log(arg) - phi

    def rhs_rate(self, phi: np.ndarray, phidot: np.ndarray, t: float) -> np.ndarray:
        """d/dt of the right-hand side along the flow."""
        ginv = inverse_metric(self.metric(phi, t))
        rate = self.background_rate(t) + self.complex_hessian(phidot)
        return 1.0 + np.einsum("nij,nij->n", ginv, rate).real - phidot

    def scalar_curvature(self, phi: np.ndarray, phidot: np.ndarray, t: float) -> np.ndarray:
        """R = -tr alpha - Laplacian (phi + phidot), from Ric = -alpha - i ddbar (phi + phidot)."""
        ginv = inverse_metric(self.metric(phi, t))
        ricci = -self._base_mat - self.complex_hessian(phi + phidot)
        return np.einsum("nij,nij->n", ginv, ricci).real

    def gradient_norm_sq(self, f: np.ndarray, phi: np.ndarray, t: float) -> np.ndarray:
        ginv = inverse_metric(self.metric(phi, t))
        d = self.complex_gradient(f)
        return np.einsum("nij,ni,nj->n", ginv, d, np.conj(d)).real

    def spectral_radius(self, phi: np.ndarray, t: float) -> float:
        raise NotImplementedError

    def initial_values(self, data: InitialData) -> np.ndarray:
        phi = data.evaluate(self.environment(self.nodes), (self.size,))
        self._check_invariance(data, phi)
        return phi

    def _check_invariance(self, data: InitialData, phi: np.ndarray) -> None:
        scale = max(1.0, float(np.max(np.abs(phi))))
        for index, generator in enumerate(self.surface.generators):
            image = generator.apply(self.nodes)
            moved = data.evaluate(self.environment(image), (self.size,))
            worst = float(np.max(np.abs(moved - phi)))
            if worst > INVARIANCE_TOL * scale:
                raise InvalidInitialData(
                    "initial data is not invariant under the deck group",
                    {"expression": data.text, "generator": index, "max_deviation": worst},
                )


class ReducedGrid(FlowGrid):
    """Periodic grid in u = log y2 for potentials depending on y2 only.

    The Monge-Ampere argument collapses to A(t) + k psi with
    psi = phi_uu - phi_u, A(t) = 1 + a e^-t and (a, k) = (4c - 1, 1) on S_M,
    (2c - 1, 1/2) on S+.
    """

    def __init__(self, surface: SurfaceData, n: int = 256, leaf_scale: float = 1.0) -> None:
        if n < 4:
            raise ValueError("reduced grid needs at least 4 nodes")
        self.surface = surface
        self.n = n
        self.leaf_scale = leaf_scale
        self.period = surface.period
        self.h = self.period / n
        self.u = np.arange(n) * self.h
        self.y2 = np.exp(self.u)
        zeros = np.zeros(n)
        self.nodes = np.stack([zeros, zeros, zeros, self.y2], axis=-1)
        if surface.kind is SurfaceKind.SM:
            self.decay_coeff, self.hessian_weight = 4.0 * leaf_scale - 1.0, 1.0
        else:
            self.decay_coeff, self.hessian_weight = 2.0 * leaf_scale - 1.0, 0.5
        self._setup_background()

    @property
    def chart(self) -> np.ndarray:
        zeros = np.zeros(self.n)
        return np.stack([zeros, zeros, zeros, self.u], axis=-1)

    def first(self, f: np.ndarray) -> np.ndarray:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * self.h)

    def second(self, f: np.ndarray) -> np.ndarray:
        return (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / self.h**2

    def psi(self, f: np.ndarray) -> np.ndarray:
        return self.second(f) - self.first(f)

    def leading(self, t: float) -> float:
        return 1.0 + self.decay_coeff * math.exp(-t)

    def argument(self, phi: np.ndarray, t: float) -> np.ndarray:
        return self.leading(t) + self.hessian_weight * self.psi(phi)

    def complex_hessian(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, 2, 2), dtype=complex)
        out[:, 1, 1] = self.psi(f) / (4.0 * self.y2**2)
        return out

    def complex_gradient(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, 2), dtype=complex)
        out[:, 1] = -0.5j * self.first(f) / self.y2
        return out

    def rhs_rate(self, phi: np.ndarray, phidot: np.ndarray, t: float) -> np.ndarray:
        k = self.hessian_weight
        decay = math.exp(-t)
        return (-self.decay_coeff * decay + k * self.psi(phidot)) / self.argument(phi, t) - phidot

    def scalar_curvature(self, phi: np.ndarray, phidot: np.ndarray, t: float) -> np.ndarray:
        k = self.hessian_weight
        return -(1.0 + k * self.psi(phi + phidot)) / self.argument(phi, t)

    def spectral_radius(self, phi: np.ndarray, t: float) -> float:
        arg = self.argument(phi, t)
        if np.any(arg <= 0):
            return math.inf
        stencil = 4.0 / self.h**2 + 1.0 / self.h
        return float(np.max(self.hessian_weight / arg)) * stencil + 1.0

    def environment(self, points: np.ndarray) -> dict[str, Any]:
        y2 = points[..., 3]
        return {"u": np.log(y2), "y2": y2, "L": self.period, "pi": math.pi}

    def location(self, index: int) -> dict[str, Any]:
        return {"node": index, "u": float(self.u[index]), "y2": float(self.y2[index])}


def _fiber_pairs() -> list[tuple[int, int]]:
    return [(b, d) for b in range(4) for d in range(b + 1, 4)]


class EquivariantGrid(FlowGrid):
    """Full grid on the S_M quotient in the chart (s1, s2, s3, u).

    Fiber nodes s in (Z/n)^3 / n map to V s; layers u_k = k L / n_u with
    y2 = e^u. Moving past u = L maps the fiber index by M^-T (row vector
    times M^-1), moving below 0 by M^T.
    """

    def __init__(self, surface: SurfaceData, n: int = 12, n_u: int = 12, leaf_scale: float = 1.0) -> None:
        if not isinstance(surface, SMData):
            raise BadKind("the full grid is implemented for S_M surfaces", {"kind": surface.kind.value})
        if n < 3 or n_u < 3:
            raise ValueError("full grid needs at least 3 nodes per axis")
        self.surface = surface
        self.n = n
        self.n_u = n_u
        self.leaf_scale = leaf_scale
        self.period = surface.period
        self.steps = np.array([1.0 / n, 1.0 / n, 1.0 / n, self.period / n_u])
        idx = np.indices((n, n, n, n_u)).reshape(4, -1).T
        self.fiber_index = idx[:, :3]
        self.layer_index = idx[:, 3]
        self.chart = idx * self.steps
        self.nodes = surface.domain.cover(self.chart)
        self.y2 = self.nodes[:, 3]
        self._neighbors: dict[tuple[int, int, int, int], np.ndarray] = {}
        self._verify_identifications()
        jac = np.zeros((self.size, 4, 4))
        jac[:, :3, :3] = surface.domain.basis_inv
        jac[:, 3, 3] = 1.0 / self.y2
        self._chart_jacobian = jac
        self._setup_background()

    def flat_index(self, fiber: np.ndarray, layer: np.ndarray) -> np.ndarray:
        n = self.n
        return ((fiber[:, 0] * n + fiber[:, 1]) * n + fiber[:, 2]) * self.n_u + layer

    def neighbor(self, offset: tuple[int, int, int, int]) -> np.ndarray:
        """Flat index of the node reached from every node by a chart offset (d s1, d s2, d s3, d u) in steps."""
        cached = self._neighbors.get(offset)
        if cached is not None:
            return cached
        surface = self.surface
        fiber = self.fiber_index + np.asarray(offset[:3], dtype=np.int64)
        layer = self.layer_index + offset[3]
        while True:
            up = layer >= self.n_u
            down = layer < 0
            if not (up.any() or down.any()):
                break
            fiber[up] = fiber[up] @ surface.M_inv
            layer[up] -= self.n_u
            fiber[down] = fiber[down] @ surface.M
            layer[down] += self.n_u
        index = self.flat_index(np.mod(fiber, self.n), layer)
        self._neighbors[offset] = index
        return index

    def _verify_identifications(self) -> None:
        ident = np.arange(self.size)
        for axis in range(4):
            plus = tuple(1 if k == axis else 0 for k in range(4))
            minus = tuple(-1 if k == axis else 0 for k in range(4))
            forward, backward = self.neighbor(plus), self.neighbor(minus)
            if np.any(np.bincount(forward, minlength=self.size) != 1) or np.any(forward[backward] != ident):
                raise Disconnected(
                    "node identification maps are not mutually inverse permutations",
                    {"axis": axis, "n": self.n, "n_u": self.n_u},
                )

    def _offset(self, b: int, sign_b: int, d: int | None = None, sign_d: int = 0) -> tuple[int, int, int, int]:
        out = [0, 0, 0, 0]
        out[b] += sign_b
        if d is not None:
            out[d] += sign_d
        return tuple(out)  # type: ignore[return-value]

    def chart_derivatives(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Central first and second differences in chart coordinates."""
        h = self.steps
        grad = np.empty((self.size, 4))
        hess = np.empty((self.size, 4, 4))
        for b in range(4):
            fp = f[self.neighbor(self._offset(b, 1))]
            fm = f[self.neighbor(self._offset(b, -1))]
            grad[:, b] = (fp - fm) / (2.0 * h[b])
            hess[:, b, b] = (fp - 2.0 * f + fm) / h[b] ** 2
        for b, d in _fiber_pairs():
            mixed = (
                f[self.neighbor(self._offset(b, 1, d, 1))]
                - f[self.neighbor(self._offset(b, 1, d, -1))]
                - f[self.neighbor(self._offset(b, -1, d, 1))]
                + f[self.neighbor(self._offset(b, -1, d, -1))]
            ) / (4.0 * h[b] * h[d])
            hess[:, b, d] = mixed
            hess[:, d, b] = mixed
        return grad, hess

    def real_derivatives(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grad_q, hess_q = self.chart_derivatives(f)
        jac = self._chart_jacobian
        grad = np.einsum("nba,nb->na", jac, grad_q)
        hess = np.einsum("nba,nbd,ndc->nac", jac, hess_q, jac)
        hess[:, 3, 3] -= grad_q[:, 3] / self.y2**2
        return grad, hess

    def complex_hessian(self, f: np.ndarray) -> np.ndarray:
        _, hess = self.real_derivatives(f)
        return np.einsum("ia,jb,nab->nij", HOLOMORPHIC, ANTIHOLOMORPHIC, hess)

    def complex_gradient(self, f: np.ndarray) -> np.ndarray:
        grad, _ = self.real_derivatives(f)
        return np.einsum("ka,na->nk", HOLOMORPHIC, grad)

    def spectral_radius(self, phi: np.ndarray, t: float) -> float:
        """Gershgorin bound of the linearized operator at phi."""
        g11, det = self.minors(phi, t)
        if np.any(g11 <= 0) or np.any(det <= 0):
            return math.inf
        ginv = inverse_metric(self.metric(phi, t))
        coeff = np.einsum("nij,ia,jb->nab", ginv, HOLOMORPHIC, ANTIHOLOMORPHIC).real
        coeff = 0.5 * (coeff + np.swapaxes(coeff, -1, -2))
        jac = self._chart_jacobian
        chart_coeff = np.abs(np.einsum("nba,nac,ndc->nbd", jac, coeff, jac))
        h = self.steps
        weights = 1.0 / np.outer(h, h)
        np.fill_diagonal(weights, 4.0 / h**2)
        bound = np.einsum("nbd,bd->n", chart_coeff, weights)
        bound += np.abs(coeff[:, 3, 3]) / self.y2**2 / h[3]
        return float(np.max(bound)) + 1.0

    def environment(self, points: np.ndarray) -> dict[str, Any]:
        chart = self.surface.domain.chart(points)
        return {
            "x1": points[..., 0],
            "y1": points[..., 1],
            "x2": points[..., 2],
            "y2": points[..., 3],
            "s1": chart[..., 0],
            "s2": chart[..., 1],
            "s3": chart[..., 2],
            "u": chart[..., 3],
            "L": self.period,
            "pi": math.pi,
        }

    def location(self, index: int) -> dict[str, Any]:
        return {
            "node": index,
            "fiber_index": self.fiber_index[index].tolist(),
            "layer": int(self.layer_index[index]),
            "chart": self.chart[index].tolist(),
        }


def build_grid(surface: SurfaceData, solver: str, n: int, n_fiber: int, n_u: int, leaf_scale: float = 1.0) -> FlowGrid:
    if solver == "full":
        return EquivariantGrid(surface, n=n_fiber, n_u=n_u, leaf_scale=leaf_scale)
    if not isinstance(surface, (SMData, SPlusData)):
        raise BadKind("unknown surface type", {"surface": type(surface).__name__})
    return ReducedGrid(surface, n=n, leaf_scale=leaf_scale)
