from .chern import (
    ChernPackage,
    chern_package,
    chern_ricci,
    christoffel,
    covariant_derivatives,
    curvature,
    torsion,
    trace,
)
from .differentiation import DifferentiationMethod, Differentiator
from .fields import MetricField, ScalarField
from .norms import tensor_norms
