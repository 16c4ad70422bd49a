from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chern import ChernPackage, CovariantDerivatives, covariant_derivatives
from .differentiation import Differentiator
from .fields import MetricField

_LEFT = "abcdefg"
_RIGHT = "nopqrst"


def contract_norm(tensor: np.ndarray, kinds: str, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Pointwise |A|_g for a tensor whose trailing indices have types ``kinds``.

    'h' lower holomorphic, 'a' lower anti-holomorphic, 'u' upper holomorphic.
    """
    rank = len(kinds)
    left = "..." + _LEFT[:rank]
    right = "..." + _RIGHT[:rank]
    operands: list[np.ndarray] = [tensor, np.conj(tensor)]
    subscripts = [left, right]
    for pos, kind in enumerate(kinds):
        if kind == "h":
            mat = ginv
        elif kind == "a":
            mat = np.swapaxes(ginv, -1, -2)
        elif kind == "u":
            mat = g
        else:
            raise ValueError(f"unknown index kind {kind!r}")
        operands.append(mat)
        subscripts.append("..." + _LEFT[pos] + _RIGHT[pos])
    squared = np.einsum(",".join(subscripts) + "->...", *operands).real
    return np.sqrt(np.maximum(squared, 0.0))


@dataclass(frozen=True)
class TensorNorms:
    torsion: np.ndarray
    dbar_torsion: np.ndarray
    nabla_torsion: np.ndarray
    curvature: np.ndarray
    nabla_curvature: np.ndarray
    nabla_bar_curvature: np.ndarray
    nabla_dbar_torsion: np.ndarray
    dbar_dbar_torsion: np.ndarray


def tensor_norms(
    field: MetricField,
    pkg: ChernPackage,
    cov: CovariantDerivatives | None = None,
    diff: Differentiator | None = None,
) -> TensorNorms:
    cov = cov or covariant_derivatives(field, pkg.point, diff)
    g, ginv = pkg.g, pkg.ginv
    return TensorNorms(
        torsion=contract_norm(pkg.torsion_lower, "hha", g, ginv),
        dbar_torsion=contract_norm(cov.dbar_torsion, "auhh", g, ginv),
        nabla_torsion=contract_norm(cov.nabla_torsion, "huhh", g, ginv),
        curvature=contract_norm(pkg.curvature, "haha", g, ginv),
        nabla_curvature=contract_norm(cov.nabla_curvature, "hhaha", g, ginv),
        nabla_bar_curvature=contract_norm(cov.nabla_bar_curvature, "ahaha", g, ginv),
        nabla_dbar_torsion=contract_norm(cov.nabla_dbar_torsion, "hauhh", g, ginv),
        dbar_dbar_torsion=contract_norm(cov.dbar_dbar_torsion, "aauhh", g, ginv),
    )
