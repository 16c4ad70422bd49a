from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from core.exceptions import Disconnected
from core.logger import StructuredLogger
from core.metrics import MetricsRegistry
from core.types import GHEstimate, GHReport, GraphSlice
from geometry.fields import MetricField
from surfaces.construct import SurfaceData

from .graph import GraphResolution, MetricGraph, build_graph

ALL_PAIRS_LIMIT = 12**3
SAMPLED_SOURCES = 64


@dataclass(frozen=True)
class CircleModel:
    """Circle of circumference ``length`` with its intrinsic distance."""

    length: float

    @property
    def diameter(self) -> float:
        return 0.5 * self.length

    def distance(self, s: np.ndarray, s_other: np.ndarray) -> np.ndarray:
        gap = np.abs(np.asarray(s) - np.asarray(s_other)) % self.length
        return np.minimum(gap, self.length - gap)

    def project(self, graph: MetricGraph, period: float) -> np.ndarray:
        """F: node -> circle coordinate (u / period) L."""
        return graph.chart[:, 3] / period * self.length


@dataclass(frozen=True)
class DistortionTerms:
    projection_excess: float
    section_distance: float
    expansion_excess: float

    @property
    def bound(self) -> float:
        return gh_upper_bound(self)


def select_sources(size: int, seed: int = 42, limit: int = SAMPLED_SOURCES, all_pairs_limit: int = ALL_PAIRS_LIMIT) -> np.ndarray:
    if size <= all_pairs_limit:
        return np.arange(size)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(size, size=min(limit, size), replace=False))


def require_connected(graph: MetricGraph) -> None:
    count = graph.component_count()
    if count != 1:
        raise Disconnected(
            "metric graph is not connected; the identification table is broken",
            {"components": count, "slice": graph.slice.value, "nodes": graph.size},
        )


def shortest_paths(
    graph: MetricGraph,
    sources: np.ndarray,
    workers: int = 1,
    metrics: MetricsRegistry | None = None,
) -> np.ndarray:
    """Rows of exact graph distances from each source; chunks run in a thread pool and are stacked in order."""
    adjacency = graph.adjacency()
    chunks = [c for c in np.array_split(np.asarray(sources), max(1, workers)) if len(c)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda chunk: dijkstra(adjacency, directed=False, indices=chunk), chunks))
    if metrics is not None:
        metrics.inc("dijkstra_sources_total", len(sources))
    return np.vstack(rows)


def graph_diameter(graph: MetricGraph, workers: int = 1, seed: int = 42, metrics: MetricsRegistry | None = None) -> float:
    require_connected(graph)
    dist = shortest_paths(graph, select_sources(graph.size, seed), workers, metrics)
    return float(np.max(dist))


def fiber_diameter(
    field: MetricField,
    surface: SurfaceData,
    y2: float = 1.0,
    resolution: GraphResolution | None = None,
    workers: int = 1,
    seed: int = 42,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
) -> float:
    graph = build_graph(field, surface, resolution, GraphSlice.FIBER, y2=y2, logger=logger)
    return graph_diameter(graph, workers, seed, metrics)


def distortion_on_graph(
    graph: MetricGraph,
    circle: CircleModel,
    period: float,
    workers: int = 1,
    seed: int = 42,
    metrics: MetricsRegistry | None = None,
) -> DistortionTerms:
    require_connected(graph)
    sources = select_sources(graph.size, seed)
    dist = shortest_paths(graph, sources, workers, metrics)
    s = circle.project(graph, period)
    projected = circle.distance(s[sources][:, None], s[None, :])
    sections = graph.fiber_origin(graph.layer[sources])
    return DistortionTerms(
        projection_excess=float(np.max(np.maximum(projected - dist, 0.0))),
        section_distance=float(np.max(dist[np.arange(len(sources)), sections])),
        expansion_excess=float(np.max(np.maximum(dist - projected, 0.0))),
    )


def circle_projection_distortion(
    field: MetricField,
    surface: SurfaceData,
    resolution: GraphResolution | None = None,
    workers: int = 1,
    seed: int = 42,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
) -> DistortionTerms:
    graph = build_graph(field, surface, resolution, GraphSlice.FULL, logger=logger)
    return distortion_on_graph(graph, CircleModel(surface.circle_length), surface.period, workers, seed, metrics)


def gh_upper_bound(terms: DistortionTerms) -> float:
    """eps with d_GH <= 3/2 eps: projection excess, section distance and half the expansion excess."""
    return max(terms.projection_excess, terms.section_distance, 0.5 * terms.expansion_excess)


def gh_estimate(
    field: MetricField,
    surface: SurfaceData,
    t: float,
    resolution: GraphResolution | None = None,
    y2: float = 1.0,
    workers: int = 1,
    seed: int = 42,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
) -> GHEstimate:
    diameter = fiber_diameter(field, surface, y2, resolution, workers, seed, logger, metrics)
    terms = circle_projection_distortion(field, surface, resolution, workers, seed, logger, metrics)
    return GHEstimate(
        t=t,
        fiber_diameter=diameter,
        projection_excess=terms.projection_excess,
        section_distance=terms.section_distance,
        expansion_excess=terms.expansion_excess,
        bound=terms.bound,
    )


def collapse_report(
    fields: list[tuple[float, MetricField]],
    surface: SurfaceData,
    source: str,
    resolution: GraphResolution | None = None,
    y2: float = 1.0,
    workers: int = 1,
    seed: int = 42,
    logger: StructuredLogger | None = None,
    metrics: MetricsRegistry | None = None,
) -> GHReport:
    report = GHReport(source=source, circle_length=surface.circle_length)
    for t, field in fields:
        estimate = gh_estimate(field, surface, t, resolution, y2, workers, seed, logger, metrics)
        report.estimates.append(estimate)
        if logger is not None:
            logger.info(
                "gh_estimate",
                "Collapse estimate computed",
                t=t,
                fiber_diameter=estimate.fiber_diameter,
                bound=estimate.bound,
            )
    return report
