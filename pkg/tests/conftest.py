from __future__ import annotations

import numpy as np
import pytest

from core.config import load_config
from core.logger import get_logger
from core.metrics import MetricsRegistry
from geometry.differentiation import default_differentiator
from surfaces.construct import construct_sm, construct_splus


@pytest.fixture()
def test_config(tmp_path):
    runtime = tmp_path / "runtime"
    return load_config(
        {
            "runtime_dir": runtime,
            "logs_dir": runtime / "logs",
            "output_root": runtime / "runs",
            "log_to_file": False,
        }
    )


@pytest.fixture()
def logger(test_config):
    return get_logger(test_config, component="test", run_id="test")


@pytest.fixture()
def metrics():
    return MetricsRegistry()


@pytest.fixture()
def sm_surface():
    return construct_sm()


@pytest.fixture()
def splus_surface():
    return construct_splus()


@pytest.fixture()
def wide_surface():
    # larger real eigenvalue, so the circle is longer than the fiber at t = 0
    return construct_sm([[0, 0, 1], [1, 0, -1], [0, 1, 12]])


@pytest.fixture()
def diff():
    return default_differentiator()


@pytest.fixture()
def rng():
    return np.random.default_rng(7)
