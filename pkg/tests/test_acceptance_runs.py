from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from collapse.distances import collapse_report
from collapse.graph import GraphResolution, build_graph, circle_length
from core.exceptions import InvalidInitialData
from core.types import GraphSlice, SolverKind, StageStatus, SurfaceKind
from diagnostics.scoring import diagnose
from flow.equation import full_from_reduced
from flow.grids import ReducedGrid
from flow.ode import constant_mode_ode
from flow.reconstruct import reconstruct_metric
from flow.runner import FlowSettings, initial_potential, run
from geometry.chern import trace_matrices
from pipeline.executor import execute
from pipeline.rejudge import rejudge_run
from pipeline.run_config import load_run_config, validate
from reference.forms import alpha, explicit_solution

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
PERTURBED = "0.1 * cos(2 * pi * u / L)"
WIDE_MATRIX = [[0, 0, 1], [1, 0, -1], [0, 1, 12]]


def test_zero_data_follows_constant_mode_to_t8(wide_surface, rng):
    times = [1.0, 2.0, 4.0, 8.0]
    trajectory = run(wide_surface, FlowSettings(n=256, t_end=8.0, dt=5e-4, snapshot_times=times))
    reference = constant_mode_ode(8.0)
    pts = wide_surface.domain.sample(16, rng)
    for t in times:
        snap = trajectory.snapshot_at(t)
        assert np.ptp(snap.phi) < 1e-10
        assert abs(snap.phi[0] - reference.phi(t)) < 1e-6
        omega = reconstruct_metric(trajectory.grid, snap)
        explicit = explicit_solution(SurfaceKind.SM, t)
        assert np.max(np.abs(omega.matrix(pts) - explicit.matrix(pts))) < 1e-6


def test_perturbed_datum_needs_the_wide_surface(sm_surface):
    # on the short circle the cos datum has phi_uu near -50
    with pytest.raises(InvalidInitialData):
        initial_potential(ReducedGrid(sm_surface, n=256), PERTURBED)


def test_shipped_reduced_run_passes_every_verdict():
    cfg = load_run_config(CONFIGS / "sm_reduced.json")
    assert cfg.flow.initial_data == PERTURBED
    surface = cfg.build_surface(CONFIGS)
    trajectory = run(surface, cfg.flow)
    result = diagnose(trajectory, workers=cfg.workers, samples=cfg.diagnose.calabi_samples, seed=cfg.seed)

    failed = {v.quantity: v.reason for v in result.report.verdicts if not v.passed}
    assert failed == {}
    assert result.report.total == 8
    series = {s.label: s for s in result.series}
    t = np.asarray(series["r_max"].times)
    assert min(series["r_min"].values) >= -10.0
    assert np.all(np.asarray(series["r_max"].values) <= 10.0 * np.exp(0.5 * t))
    late = [v for s, v in zip(series["sup_phidot"].times, series["sup_phidot"].values) if s >= 1.0]
    assert max(late) <= 10.0
    assert min(series["volume_ratio_min"].values) >= 0.1
    assert max(series["volume_ratio_max"].values) <= 10.0


@pytest.mark.slow
def test_full_grid_keeps_positivity_and_matches_reduced(sm_surface):
    common = {"t_end": 3.0, "dt": 0.002, "snapshot_every": 0.5, "initial_data": "0.002 * cos(2 * pi * u / L)"}
    full = run(sm_surface, FlowSettings(solver=SolverKind.FULL, n_fiber=12, n_u=12, **common))
    reduced = run(sm_surface, FlowSettings(n=12, **common))

    assert full.total_halvings <= 8
    last = full.snapshots[-1]
    assert last.t == 3.0
    gap = trace_matrices(full.grid.metric(last.phi, 3.0), full.grid.background(3.0)) - 2.0
    assert np.max(np.abs(gap)) <= 0.3
    lifted = full_from_reduced(reduced.grid, full.grid, reduced.snapshots[-1].phi)
    assert np.max(np.abs(last.phi - lifted)) < 1e-4


def test_circle_length_from_base_graph(sm_surface):
    graph = build_graph(alpha(), sm_surface, GraphResolution(n_u=256), GraphSlice.BASE)
    expected = math.log(sm_surface.lam) / math.sqrt(2.0)
    assert circle_length(graph) == pytest.approx(expected, rel=0.02)


@pytest.mark.slow
def test_collapse_along_explicit_solution_at_24_cubed(sm_surface):
    fields = [(t, explicit_solution(SurfaceKind.SM, t)) for t in (0.0, 2.0, 4.0, 6.0)]
    report = collapse_report(fields, sm_surface, source="explicit", resolution=GraphResolution(n=24, n_u=12), workers=4)
    first, last = report.estimates[0], report.estimates[-1]
    assert last.fiber_diameter < 0.25 * first.fiber_diameter
    bounds = [e.bound for e in report.estimates]
    assert all(later <= earlier * 1.05 for earlier, later in zip(bounds, bounds[1:]))


def test_outputs_match_across_worker_counts(tmp_path, test_config):
    def config(workers: int):
        return validate(
            {
                "surface": {"kind": "sm", "matrix": WIDE_MATRIX},
                "pipeline": ["construct", "flow", "diagnose", "gh"],
                "flow": {"n": 64, "t_end": 4.0, "dt": 0.002, "snapshot_every": 0.5, "initial_data": PERTURBED},
                "diagnose": {"calabi_samples": 4, "informational_calabi": True},
                "gh": {"times": [0.0, 4.0], "resolution": {"n": 3, "n_u": 4, "stencil": "axis"}},
                "workers": workers,
            }
        )

    serial, serial_dir = execute(config(1), config=test_config, out_dir=tmp_path / "serial")
    pooled, _ = execute(config(3), config=test_config, out_dir=tmp_path / "pooled")

    assert all(r.status is StageStatus.COMPLETED for r in serial.stages)
    hashes = {a.path: a.sha256 for a in serial.artifacts}
    assert hashes == {a.path: a.sha256 for a in pooled.artifacts}
    assert any(path.endswith(".csv") for path in hashes)

    rejudged = rejudge_run(serial_dir)
    assert rejudged.reproduced
    calabi = next(v for v in rejudged.report.verdicts if v.quantity == "calabi_quantity")
    assert calabi.informational
