import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shopsim.demo import (
    SHELF_ARM_HOME,
    demo_store,
    planar_arm,
    shelf_arm,
    shelf_arm_grid,
)
from shopsim.roadmap import GridSpec, build_collision_map, build_roadmap


@pytest.fixture(scope="session")
def bench_arm():
    """Planar 2-link arm used by the planner benchmarks."""
    return planar_arm(link_lengths=(0.5, 0.5), sphere_radius=0.06)


@pytest.fixture(scope="session")
def bench_grid():
    return GridSpec(origin=(-1.3, -1.3, -0.1), resolution=0.05, dims=(52, 52, 4))


@pytest.fixture(scope="session")
def bench_roadmap(bench_arm, bench_grid):
    roadmap = build_roadmap(bench_arm, 4000, 10, seed=3)
    cmap = build_collision_map(roadmap, bench_arm, bench_grid, edge_step=0.05)
    return roadmap, cmap


@pytest.fixture(scope="session")
def shop_assets():
    """Store + arm + roadmap shared by executor, CLI, and acceptance tests."""
    store = demo_store(48, seed=0, min_stock=2)
    arm = shelf_arm()
    roadmap = build_roadmap(arm, 1500, 10, seed=7)
    cmap = build_collision_map(roadmap, arm, shelf_arm_grid(), edge_step=0.05)
    return store, arm, roadmap, cmap


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
