from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grids import EquivariantGrid, FlowGrid, ReducedGrid
from .integrator import Integrator


@dataclass(frozen=True)
class FlowState:
    phi: np.ndarray
    t: float
    grid: FlowGrid

    def __post_init__(self) -> None:
        if self.phi.shape != (self.grid.size,):
            raise ValueError(f"phi has shape {self.phi.shape}, grid has {self.grid.size} nodes")
        if self.t < 0:
            raise ValueError("flow time must be nonnegative")


@dataclass(frozen=True)
class ReducedState(FlowState):
    grid: ReducedGrid

    @property
    def n(self) -> int:
        return self.grid.n


def ma_rhs(state: FlowState) -> np.ndarray:
    """log(e^t det(g~ + i ddbar phi) / Omega) - phi from the complex Hessian on the grid."""
    grid = state.grid
    return grid.log_argument(FlowGrid.determinant_argument(grid, state.phi, state.t), state.phi, state.t)


def reduced_rhs(state: ReducedState) -> np.ndarray:
    return state.grid.rhs(state.phi, state.t)


def step(state: FlowState, dt: float, integrator: Integrator | None = None) -> FlowState:
    integrator = integrator or Integrator(state.grid)
    phi, event = integrator.step(state.phi, state.t, dt)
    return replace(state, phi=phi, t=event.t)


def full_from_reduced(reduced: ReducedGrid, full: EquivariantGrid, phi: np.ndarray) -> np.ndarray:
    """Lift a y2-only potential on matched layers (full.n_u == reduced.n) to the full grid."""
    if full.n_u != reduced.n:
        raise ValueError("layers of the full grid must match the reduced nodes")
    return phi[full.layer_index]
