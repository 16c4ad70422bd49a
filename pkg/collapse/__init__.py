from .distances import (
    CircleModel,
    DistortionTerms,
    circle_projection_distortion,
    collapse_report,
    fiber_diameter,
    gh_estimate,
    gh_upper_bound,
    shortest_paths,
)
from .export import to_networkx, write_graphml
from .graph import GraphResolution, MetricGraph, build_graph, circle_length, riemannian_matrix, segment_length
from .lattice import lll_reduce, short_offsets
