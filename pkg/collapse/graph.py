from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field
from scipy.sparse import csr_array
from scipy.sparse.csgraph import connected_components

from core.exceptions import SingularMetric
from core.logger import StructuredLogger
from core.types import GraphSlice, Stencil
from geometry.fields import MetricField
from surfaces.construct import SurfaceData

from .lattice import axis_offsets, lll_reduce, short_offsets

# dz_i = C_i . (dx1, dy1, dx2, dy2)
DZ = np.array([[1.0, 1.0j, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0j]])
_U_TOL = 1e-12


class GraphResolution(BaseModel):
    n: int = Field(default=12, ge=2)
    n_u: int = Field(default=12, ge=3)
    pieces: int = Field(default=4, ge=1)
    stencil: Stencil = Stencil.REDUCED


def riemannian_matrix(g: np.ndarray) -> np.ndarray:
    """g_R = 2 Re(g_{i jbar} dz_i (x) dzbar_j) as a real 4x4 matrix in (x1, y1, x2, y2)."""
    return 2.0 * np.einsum("ia,...ij,jb->...ab", DZ, g, DZ.conj()).real


def segment_length(field: MetricField, a: np.ndarray, b: np.ndarray, pieces: int = 4) -> np.ndarray:
    """Length of the straight segment a -> b by the composite midpoint rule."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    delta = (b - a) / pieces
    frac = (np.arange(pieces) + 0.5)[:, None]
    mids = a[..., None, :] + frac * delta[..., None, :]
    g_r = riemannian_matrix(field.matrix(mids))
    squared = np.einsum("...a,...pab,...b->...p", delta, g_r, delta)
    return np.sqrt(np.maximum(squared, 0.0)).sum(axis=-1)


@dataclass
class MetricGraph:
    slice: GraphSlice
    field_name: str
    n: int
    n_u: int
    nodes: np.ndarray
    chart: np.ndarray
    layer: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    wrap: np.ndarray
    snap_error: float = 0.0

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def wrap_count(self) -> int:
        return int(np.count_nonzero(self.wrap))

    def adjacency(self) -> csr_array:
        i, j = self.edges[:, 0], self.edges[:, 1]
        return csr_array(
            (np.concatenate([self.weights, self.weights]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.size, self.size),
        )

    def component_count(self) -> int:
        count, _ = connected_components(self.adjacency(), directed=False)
        return int(count)

    def fiber_origin(self, layer: np.ndarray) -> np.ndarray:
        """Node at fiber coordinates 0 over each given layer."""
        layer = np.asarray(layer, dtype=np.int64)
        if self.slice is GraphSlice.FIBER:
            return np.zeros_like(layer)
        per_layer = 1 if self.slice is GraphSlice.BASE else self.n**3
        return layer * per_layer


class _Layout:
    def __init__(self, surface: SurfaceData, resolution: GraphResolution, graph_slice: GraphSlice, y2: float) -> None:
        self.surface = surface
        self.domain = surface.domain
        self.slice = graph_slice
        self.n = resolution.n
        self.n_u = resolution.n_u
        self.h_u = surface.period / self.n_u
        if graph_slice is GraphSlice.BASE:
            fiber = np.zeros((1, 3))
            u = np.arange(self.n_u) * self.h_u
        else:
            fiber = np.indices((self.n,) * 3).reshape(3, -1).T / self.n
            if graph_slice is GraphSlice.FIBER:
                u = np.array([np.mod(np.log(y2), surface.period)])
            else:
                u = np.arange(self.n_u) * self.h_u
        layers = len(u)
        self.per_layer = fiber.shape[0]
        self.layer = np.repeat(np.arange(layers), self.per_layer)
        self.chart = np.concatenate([np.tile(fiber, (layers, 1)), np.repeat(u, self.per_layer)[:, None]], axis=1)
        self.nodes = self.domain.cover(self.chart)

    def snap(self, pts: np.ndarray) -> tuple[np.ndarray, float]:
        if self.slice is GraphSlice.FIBER:
            reduced = self.domain.reduce_array(pts, snap=_U_TOL, fiber_snap=0.5 / self.n)
        else:
            reduced = self.domain.reduce_array(pts, snap=0.5 / self.n_u, fiber_snap=0.5 / self.n)
        chart = reduced.chart
        if self.slice is GraphSlice.BASE:
            fiber_index = np.zeros(len(chart), dtype=np.int64)
            fiber_err = np.max(np.abs(chart[:, :3]), initial=0.0)
        else:
            steps = np.rint(chart[:, :3] * self.n)
            fiber_err = np.max(np.abs(chart[:, :3] * self.n - steps), initial=0.0) / self.n
            q = steps.astype(np.int64) % self.n
            fiber_index = (q[:, 0] * self.n + q[:, 1]) * self.n + q[:, 2]
        if self.slice is GraphSlice.FIBER:
            layer = np.zeros(len(chart), dtype=np.int64)
            u_err = 0.0
        else:
            levels = np.rint(chart[:, 3] / self.h_u)
            u_err = float(np.max(np.abs(chart[:, 3] - levels * self.h_u), initial=0.0))
            layer = levels.astype(np.int64) % self.n_u
        return layer * self.per_layer + fiber_index, max(float(fiber_err), u_err)

    def fiber_jacobian(self, u: float) -> np.ndarray:
        origin = np.array([0.0, 0.0, 0.0, u])
        steps = origin + np.concatenate([np.eye(3), np.zeros((3, 1))], axis=1)
        return (self.domain.cover(steps) - self.domain.cover(origin)).T


def fiber_offsets(gram: np.ndarray, stencil: Stencil) -> np.ndarray:
    """Integer chart offsets for fiber edges; the reduced stencil adds short vectors of the LLL basis."""
    axes = axis_offsets(3)
    if stencil is Stencil.AXIS:
        return axes
    combos = np.concatenate([axes, short_offsets(lll_reduce(np.eye(3, dtype=np.int64), gram))])
    first = combos[np.arange(len(combos)), np.argmax(combos != 0, axis=1)]
    combos = combos * np.sign(first)[:, None]
    return np.unique(combos, axis=0)


def _dedupe(src: np.ndarray, dst: np.ndarray, weights: np.ndarray, wrap: np.ndarray, size: int):
    keep = src != dst
    lo = np.minimum(src, dst)[keep]
    hi = np.maximum(src, dst)[keep]
    weights, wrap = weights[keep], wrap[keep]
    keys = lo * size + hi
    order = np.lexsort((weights, keys))
    _, first = np.unique(keys[order], return_index=True)
    pick = order[first]
    return np.stack([lo[pick], hi[pick]], axis=1), weights[pick], wrap[pick]


def build_graph(
    field: MetricField,
    surface: SurfaceData,
    resolution: GraphResolution | None = None,
    graph_slice: GraphSlice = GraphSlice.FIBER,
    y2: float = 1.0,
    logger: StructuredLogger | None = None,
) -> MetricGraph:
    """Nearest-neighbour graph on the quotient grid weighted by Riemannian segment lengths.

    Edge end points are reduced to the fundamental domain and snapped to the
    nearest node, which realizes the lattice identifications as wrap edges.
    The base slice carries only the y2 circle, so a degenerate base form is allowed there.
    """
    resolution = resolution or GraphResolution()
    layout = _Layout(surface, resolution, graph_slice, y2)
    if graph_slice is not GraphSlice.BASE:
        field.check_positive(layout.nodes)

    sources, targets, lengths, wraps = [], [], [], []
    snap_error = 0.0

    def add(index: np.ndarray, raw_chart: np.ndarray) -> None:
        nonlocal snap_error
        start = layout.chart[index]
        end = layout.domain.cover(raw_chart)
        target, err = layout.snap(end)
        snap_error = max(snap_error, err)
        out_of_box = np.any((raw_chart[:, :3] >= 1.0 - 1e-12) | (raw_chart[:, :3] < 0.0), axis=1)
        out_of_box |= raw_chart[:, 3] >= surface.period - 1e-12
        sources.append(index)
        targets.append(target)
        lengths.append(segment_length(field, layout.domain.cover(start), end, resolution.pieces))
        wraps.append(out_of_box)

    if graph_slice is not GraphSlice.BASE:
        for layer in np.unique(layout.layer):
            index = np.flatnonzero(layout.layer == layer)
            u = float(layout.chart[index[0], 3])
            jac = layout.fiber_jacobian(u)
            g_r = riemannian_matrix(field.matrix(layout.nodes[index])).mean(axis=0)
            gram = jac.T @ g_r @ jac / resolution.n**2
            for offset in fiber_offsets(gram, resolution.stencil):
                raw = layout.chart[index].copy()
                raw[:, :3] += offset / resolution.n
                add(index, raw)
    if graph_slice is not GraphSlice.FIBER:
        index = np.arange(len(layout.chart))
        raw = layout.chart.copy()
        raw[:, 3] += layout.h_u
        add(index, raw)

    weights = np.concatenate(lengths)
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise SingularMetric(
            f"{field.name} gives a non-positive edge length",
            {"metric": field.name, "min_weight": float(np.nanmin(weights))},
        )
    edges, weights, wrap = _dedupe(np.concatenate(sources), np.concatenate(targets), weights, np.concatenate(wraps), len(layout.chart))
    graph = MetricGraph(
        slice=graph_slice,
        field_name=field.name,
        n=resolution.n,
        n_u=resolution.n_u,
        nodes=layout.nodes,
        chart=layout.chart,
        layer=layout.layer,
        edges=edges,
        weights=weights,
        wrap=wrap,
        snap_error=snap_error,
    )
    if logger is not None:
        logger.info(
            "graph_built",
            "Metric graph built",
            slice=graph_slice.value,
            metric=field.name,
            nodes=graph.size,
            edges=len(edges),
            wrap_edges=graph.wrap_count,
            snap_error=snap_error,
        )
    return graph


def circle_length(graph: MetricGraph) -> float:
    """Total edge length of the base cycle."""
    if graph.slice is not GraphSlice.BASE:
        raise ValueError("circle length is defined on the base slice")
    return float(np.sum(graph.weights))
