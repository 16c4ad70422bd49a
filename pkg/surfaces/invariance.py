from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .group import GroupElement, apply_group

if TYPE_CHECKING:
    from geometry.fields import MetricField


def pullback(form: "MetricField", g: GroupElement, pts: np.ndarray) -> np.ndarray:
    """Components of g* form at pts: J^T G(g p) conj(J)."""
    jac = g.affine.jacobian()
    image = form.matrix(apply_group(g, pts))
    return np.einsum("ki,...kl,lj->...ij", jac, image, jac.conj())


def check_invariance(form: "MetricField", g: GroupElement, samples: np.ndarray) -> float:
    samples = np.asarray(samples, dtype=float)
    deviation = np.abs(pullback(form, g, samples) - form.matrix(samples))
    return float(np.max(deviation)) if deviation.size else 0.0
