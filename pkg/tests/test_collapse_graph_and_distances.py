from __future__ import annotations

from dataclasses import replace

import networkx as nx
import numpy as np
import pytest

from collapse.distances import (
    CircleModel,
    DistortionTerms,
    collapse_report,
    fiber_diameter,
    graph_diameter,
    gh_upper_bound,
    select_sources,
    shortest_paths,
)
from collapse.export import write_graphml
from collapse.graph import GraphResolution, build_graph, circle_length, fiber_offsets, riemannian_matrix
from collapse.lattice import gram_schmidt, lll_reduce, short_offsets
from core.exceptions import Disconnected, SingularMetric
from core.types import GraphSlice, Stencil, SurfaceKind
from geometry.fields import euclidean
from reference.forms import alpha, explicit_solution


def test_riemannian_matrix_of_identity_is_twice_euclidean():
    assert np.allclose(riemannian_matrix(np.eye(2, dtype=complex)), 2.0 * np.eye(4))


def test_axis_stencil_edges_are_exact_for_constant_metric(sm_surface):
    n = 4
    graph = build_graph(euclidean(), sm_surface, GraphResolution(n=n, stencil=Stencil.AXIS), GraphSlice.FIBER)
    origin = sm_surface.domain.cover(np.zeros(4))
    steps = sm_surface.domain.cover(np.eye(4)[:3]) - origin
    expected = np.sqrt(2.0) * np.linalg.norm(steps, axis=1) / n
    assert graph.size == n**3
    assert len(graph.edges) == 3 * n**3
    assert graph.wrap_count == 3 * n**2
    for value in np.unique(np.round(graph.weights, 12)):
        assert np.min(np.abs(expected - value)) < 1e-12
    assert graph.snap_error < 1e-9
    assert graph.component_count() == 1


def test_base_circle_length_matches_surface(sm_surface, wide_surface):
    for surface in (sm_surface, wide_surface):
        graph = build_graph(alpha(), surface, GraphResolution(n_u=64), GraphSlice.BASE)
        assert graph.size == 64
        assert circle_length(graph) == pytest.approx(surface.circle_length, rel=1e-3)
        assert graph.wrap_count == 1


def test_degenerate_fiber_metric_is_rejected(sm_surface):
    with pytest.raises(SingularMetric):
        build_graph(alpha(), sm_surface, GraphResolution(n=4), GraphSlice.FIBER)


def test_scaling_metric_by_four_doubles_distances(sm_surface):
    resolution = GraphResolution(n=5)
    field = explicit_solution(SurfaceKind.SM, 1.0)
    base = fiber_diameter(field, sm_surface, resolution=resolution)
    scaled = fiber_diameter(field.scaled(4.0), sm_surface, resolution=resolution)
    assert scaled == pytest.approx(2.0 * base, rel=1e-12)


def test_fiber_shrinks_along_explicit_solution(sm_surface):
    resolution = GraphResolution(n=6, stencil=Stencil.AXIS)
    start = fiber_diameter(explicit_solution(SurfaceKind.SM, 0.0), sm_surface, resolution=resolution)
    late = fiber_diameter(explicit_solution(SurfaceKind.SM, 6.0), sm_surface, resolution=resolution)
    assert late < start


def test_broken_identifications_raise_disconnected(sm_surface):
    graph = build_graph(euclidean(), sm_surface, GraphResolution(n=3, stencil=Stencil.AXIS), GraphSlice.FIBER)
    broken = replace(graph, edges=graph.edges[:2], weights=graph.weights[:2], wrap=graph.wrap[:2])
    with pytest.raises(Disconnected) as info:
        graph_diameter(broken)
    assert info.value.diagnostics["components"] > 1


def test_parallel_dijkstra_matches_serial(sm_surface, metrics):
    graph = build_graph(euclidean(), sm_surface, GraphResolution(n=4), GraphSlice.FIBER)
    sources = np.arange(graph.size)
    serial = shortest_paths(graph, sources, workers=1)
    parallel = shortest_paths(graph, sources, workers=3, metrics=metrics)
    assert np.array_equal(serial, parallel)
    assert metrics.get("dijkstra_sources_total") == graph.size
    assert np.allclose(serial, serial.T)


def test_source_selection():
    assert np.array_equal(select_sources(10), np.arange(10))
    picked = select_sources(5000, seed=1)
    assert len(picked) == 64
    assert np.array_equal(picked, np.unique(picked))
    assert np.array_equal(picked, select_sources(5000, seed=1))


def test_lll_reduction_is_size_reduced_and_unimodular():
    skew = np.array([[1.0, 7.0, 3.0], [0.0, 1.0, 5.0], [0.0, 0.0, 1.0]])
    gram = skew.T @ skew
    reduced = lll_reduce(np.eye(3, dtype=np.int64), gram)
    assert abs(round(np.linalg.det(reduced))) == 1
    mu, norms = gram_schmidt(reduced, gram)
    assert np.all(np.abs(np.tril(mu, -1)) <= 0.5 + 1e-12)
    for k in range(1, 3):
        assert norms[k] >= (0.75 - mu[k, k - 1] ** 2) * norms[k - 1] - 1e-12
    assert len(short_offsets(reduced)) == 13
    with pytest.raises(ValueError):
        lll_reduce(np.eye(3, dtype=np.int64), gram, delta=1.0)


def test_reduced_stencil_offsets_are_canonical():
    offsets = fiber_offsets(np.diag([1.0, 4.0, 9.0]), Stencil.REDUCED)
    assert {tuple(row) for row in np.eye(3, dtype=int)} <= {tuple(row) for row in offsets}
    first = offsets[np.arange(len(offsets)), np.argmax(offsets != 0, axis=1)]
    assert np.all(first > 0)
    assert len(offsets) == 13


def test_circle_model_and_bound():
    circle = CircleModel(length=1.0)
    assert circle.diameter == 0.5
    assert circle.distance(np.array(0.1), np.array(0.9)) == pytest.approx(0.2)
    terms = DistortionTerms(projection_excess=0.1, section_distance=0.05, expansion_excess=0.4)
    assert gh_upper_bound(terms) == pytest.approx(0.2)
    assert terms.bound == gh_upper_bound(terms)


def test_collapse_report_on_explicit_solution(wide_surface, logger, metrics, capsys):
    resolution = GraphResolution(n=4, n_u=6, stencil=Stencil.AXIS)
    fields = [(t, explicit_solution(SurfaceKind.SM, t)) for t in (0.0, 4.0)]
    report = collapse_report(fields, wide_surface, source="explicit", resolution=resolution, workers=2, logger=logger, metrics=metrics)
    assert report.circle_length == pytest.approx(wide_surface.circle_length)
    assert [e.t for e in report.estimates] == [0.0, 4.0]
    first, last = report.estimates
    assert last.fiber_diameter < first.fiber_diameter
    for estimate in report.estimates:
        assert estimate.bound >= estimate.section_distance >= 0.0
    out = capsys.readouterr().out
    assert '"event": "graph_built"' in out
    assert '"event": "gh_estimate"' in out


def test_graphml_export(sm_surface, tmp_path):
    graph = build_graph(euclidean(), sm_surface, GraphResolution(n=3, stencil=Stencil.AXIS), GraphSlice.FIBER)
    path = write_graphml(graph, tmp_path / "graph.graphml")
    loaded = nx.read_graphml(path)
    assert loaded.number_of_nodes() == graph.size
    assert loaded.number_of_edges() == len(graph.edges)
