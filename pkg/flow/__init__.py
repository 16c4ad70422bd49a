from .equation import FlowState, ReducedState, ma_rhs, reduced_rhs, step
from .grids import EquivariantGrid, FlowGrid, ReducedGrid, build_grid
from .integrator import Integrator
from .ode import constant_mode_ode
from .reconstruct import reconstruct_metric
from .runner import FlowSettings, Snapshot, Trajectory, run
