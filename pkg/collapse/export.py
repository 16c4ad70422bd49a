from __future__ import annotations

from pathlib import Path

import networkx as nx

from .graph import MetricGraph


def to_networkx(graph: MetricGraph) -> nx.Graph:
    out = nx.Graph(slice=graph.slice.value, metric=graph.field_name, n=graph.n, n_u=graph.n_u)
    for index, (chart, layer) in enumerate(zip(graph.chart, graph.layer)):
        out.add_node(
            index,
            q1=float(chart[0]),
            q2=float(chart[1]),
            q3=float(chart[2]),
            u=float(chart[3]),
            layer=int(layer),
        )
    for (i, j), weight, wrap in zip(graph.edges, graph.weights, graph.wrap):
        out.add_edge(int(i), int(j), weight=float(weight), wrap=bool(wrap))
    return out


def write_graphml(graph: MetricGraph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx.write_graphml(to_networkx(graph), path)
    return path
