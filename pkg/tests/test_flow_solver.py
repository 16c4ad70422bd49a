from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from core.exceptions import InvalidInitialData, StepFailure
from core.types import SolverKind, StepScheme
from flow.equation import FlowState, ReducedState, full_from_reduced, ma_rhs, reduced_rhs, step
from flow.expressions import parse_initial_data
from flow.grids import EquivariantGrid, ReducedGrid
from flow.integrator import Integrator, RKCCoefficients
from flow.ode import constant_mode_ode
from flow.reconstruct import reconstruct_metric
from flow.runner import FlowSettings, Snapshot, initial_potential, run


def _wave(grid: ReducedGrid, amplitude: float = 0.002) -> np.ndarray:
    return amplitude * np.sin(2.0 * math.pi * grid.u / grid.period)


def test_reduced_rhs_matches_monge_ampere_form(sm_surface, splus_surface):
    for surface in (sm_surface, splus_surface):
        grid = ReducedGrid(surface, n=64)
        state = ReducedState(phi=_wave(grid), t=0.7, grid=grid)
        assert np.allclose(ma_rhs(state), reduced_rhs(state), atol=1e-12)


def test_full_grid_agrees_with_reduced_on_y2_only_data(sm_surface):
    reduced = ReducedGrid(sm_surface, n=8)
    full = EquivariantGrid(sm_surface, n=4, n_u=8)
    phi_r = _wave(reduced, 0.001)
    phi_f = full_from_reduced(reduced, full, phi_r)
    for t in (0.0, 0.5):
        assert np.allclose(full.rhs(phi_f, t), reduced.rhs(phi_r, t)[full.layer_index], atol=1e-9)
    assert np.allclose(
        ma_rhs(FlowState(phi=phi_f, t=0.5, grid=full)),
        full.rhs(phi_f, 0.5),
        atol=1e-12,
    )


def test_zero_data_tracks_constant_mode(sm_surface):
    settings = FlowSettings(n=64, t_end=2.0, dt=1e-3, snapshot_every=0.5)
    trajectory = run(sm_surface, settings)
    assert trajectory.times == [0.0, 0.5, 1.0, 1.5, 2.0]
    reference = constant_mode_ode(2.0)
    for snap in trajectory.snapshots:
        assert np.ptp(snap.phi) < 1e-12
        assert snap.phi[0] == pytest.approx(reference.phi(snap.t), abs=1e-5)
        assert snap.phidot[0] == pytest.approx(reference.phidot(snap.t), abs=1e-5)


def test_full_solver_zero_data_smoke(sm_surface):
    settings = FlowSettings(solver=SolverKind.FULL, n_fiber=4, n_u=4, t_end=0.2, dt=0.005, snapshot_every=0.1)
    trajectory = run(sm_surface, settings)
    reference = constant_mode_ode(0.2)
    last = trajectory.snapshots[-1]
    assert not trajectory.reduced
    assert np.allclose(last.phi, reference.phi(0.2), atol=1e-4)


@pytest.mark.parametrize(
    "expression",
    [
        "-50 * cos(2 * pi * u / L)",  # not positive
        "u",  # not deck invariant
        "z + 1",  # unknown name
        "sin(",  # syntax
        "__import__('os')",  # outside the grammar
        "10 ** 10 ** 10",  # overflows
        "1 / 0",
    ],
)
def test_invalid_initial_data_is_rejected(sm_surface, expression):
    grid = ReducedGrid(sm_surface, n=64)
    with pytest.raises(InvalidInitialData):
        initial_potential(grid, expression)


def test_initial_data_grammar_reports_names():
    data = parse_initial_data("0.1 * sin(2 * pi * u / L)")
    assert data.names == frozenset({"u", "L", "pi"})
    assert not data.is_constant
    assert parse_initial_data("2 * pi").is_constant


def test_overflow_reports_expression_offset():
    data = parse_initial_data("0.1 + 10 ** 10 ** 10")
    with pytest.raises(InvalidInitialData) as info:
        data.evaluate({}, (4,))
    assert info.value.diagnostics["offset"] == 6
    assert info.value.diagnostics["expression"] == "0.1 + 10 ** 10 ** 10"


def test_midpoint_step_halves_until_stable(sm_surface, metrics):
    grid = ReducedGrid(sm_surface, n=64)
    integrator = Integrator(grid, scheme=StepScheme.MIDPOINT, max_halvings=4, metrics=metrics)
    phi, event = integrator.step(np.zeros(grid.size), 0.0, 1e-4)
    assert event.halvings == 3
    assert event.dt_used == pytest.approx(1.25e-5)
    assert metrics.get("flow_step_halvings_total") == 3
    assert np.all(np.isfinite(phi))


def test_step_failure_after_max_halvings(sm_surface):
    grid = ReducedGrid(sm_surface, n=64)
    integrator = Integrator(grid, scheme=StepScheme.MIDPOINT, max_halvings=2)
    with pytest.raises(StepFailure) as info:
        integrator.step(np.zeros(grid.size), 0.0, 1e-4)
    assert info.value.diagnostics["dt_requested"] == 1e-4
    assert info.value.diagnostics["signals"]


def test_rkc_step_advances_state(sm_surface):
    grid = ReducedGrid(sm_surface, n=64)
    state = ReducedState(phi=np.zeros(grid.size), t=0.0, grid=grid)
    nxt = step(state, 1e-3)
    assert nxt.t == pytest.approx(1e-3)
    # phi' = log 4 at t = 0
    assert nxt.phi[0] == pytest.approx(1e-3 * math.log(4.0), rel=2e-3)
    coeffs = RKCCoefficients.build(5)
    assert coeffs.stages == 5
    assert coeffs.c[-1] == pytest.approx(1.0)


def test_flow_settings_validation():
    settings = FlowSettings(t_end=2.0, snapshot_times=[1.0, 0.5, 1.0])
    assert settings.resolved_snapshot_times() == [0.0, 0.5, 1.0, 2.0]
    with pytest.raises(ValidationError):
        FlowSettings(t_end=1.0, snapshot_times=[2.0])
    with pytest.raises(ValidationError):
        FlowSettings(dt=0.0)


def test_reconstruction_reproduces_node_metric(sm_surface):
    grid = ReducedGrid(sm_surface, n=32)
    phi = _wave(grid)
    snap = Snapshot(t=1.0, phi=phi, phidot=grid.rhs(phi, 1.0))
    field = reconstruct_metric(grid, snap)
    assert np.allclose(field.matrix(grid.nodes), grid.metric(phi, 1.0), atol=1e-10)

    flat = Snapshot(t=1.0, phi=np.full(grid.size, 0.3), phidot=np.zeros(grid.size))
    assert reconstruct_metric(grid, flat).analytic


def test_full_reconstruction_reproduces_node_metric(sm_surface):
    reduced = ReducedGrid(sm_surface, n=4)
    full = EquivariantGrid(sm_surface, n=4, n_u=4)
    phi = full_from_reduced(reduced, full, _wave(reduced, 0.001))
    snap = Snapshot(t=0.5, phi=phi, phidot=np.zeros(full.size))
    field = reconstruct_metric(full, snap)
    assert np.allclose(field.matrix(full.nodes), full.metric(phi, 0.5), atol=1e-8)
