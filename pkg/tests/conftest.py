import numpy as np
import pytest

from flowhks import abc_velocity, integrate_pathlines, seed_grid
from flowhks.pipeline import PipelineConfig, run_pipeline

# pinned desk-scale ABC configuration used across the suite
DESK_DOMAIN = (0.0, 0.0, 8 * np.pi, 8 * np.pi)
DESK_GRID = (50, 50)
DESK_CONFIG = PipelineConfig(M=30, alpha=0.5, beta=0.01, n_eig=300)


@pytest.fixture(scope="session")
def desk_pathlines():
    seeds = seed_grid(DESK_DOMAIN, DESK_GRID)
    return integrate_pathlines(abc_velocity(), seeds, 0.0, 2 * np.pi, 30)


@pytest.fixture(scope="session")
def desk_result(desk_pathlines):
    return run_pipeline(desk_pathlines, DESK_CONFIG)


@pytest.fixture(scope="session")
def small_abc_result():
    """16x16 ABC pipeline for cheap end-to-end property tests."""
    seeds = seed_grid(DESK_DOMAIN, (16, 16))
    pathlines = integrate_pathlines(abc_velocity(), seeds, 0.0, 2 * np.pi, 12)
    config = PipelineConfig(M=12, alpha=0.5, n_eig=80)
    return run_pipeline(pathlines, config)
