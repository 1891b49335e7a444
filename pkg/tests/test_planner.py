import math

import numpy as np
import pytest

from shopsim.errors import NoPath, StartInCollision
from shopsim.kinematics import forward_kinematics, sphere_centers_batch
from shopsim.planner import (
    JointPath,
    PlanParams,
    WorldSnapshot,
    config_in_collision,
    make_segment_validator,
    plan_to_pose,
    prune,
    shortcut,
    validate_path,
)
from shopsim.roadmap import segment_samples
from shopsim.transforms import pose_xyzyaw
from shopsim.voxels import VoxelMap, voxel_insert_points


def box_world(grid, boxes):
    """World map aligned with a collision grid; boxes are (lo, hi) corners."""
    world = VoxelMap(resolution=grid.resolution, origin=np.asarray(grid.origin))
    for lo, hi in boxes:
        axes = [np.arange(a + grid.resolution / 2, b, grid.resolution / 2) for a, b in zip(lo, hi)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        voxel_insert_points(world, np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1))
    return world


PARAMS = PlanParams(pos_tol=1e-3, rot_tol=None, neighborhood_radius=0.2, step=0.02)


def test_prune_empty_world_keeps_everything(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    na, ea = prune(roadmap, cmap, world)
    assert na.all() and ea.all()


def test_prune_solid_world_kills_everything(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((-1.2, -1.2, -0.1), (1.2, 1.2, 0.1))])
    na, ea = prune(roadmap, cmap, world)
    assert not na.any() and not ea.any()


def test_prune_single_voxel_equals_cmap_lists(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    point = np.array([0.62, 0.12, 0.0])
    voxel_insert_points(world, point[None, :])
    fid = int(bench_grid.locate(point[None, :])[0])
    na, ea = prune(roadmap, cmap, world)
    dead_nodes = set(np.nonzero(~na)[0].tolist())
    dead_edges = set(np.nonzero(~ea)[0].tolist())
    assert dead_nodes == set(cmap.nodes_in_collision(fid).tolist())
    assert dead_edges == set(cmap.edges_in_collision(fid).tolist())
    # every pruned node really collides under the direct geometric check
    snap = WorldSnapshot.from_map(world)
    for n in dead_nodes:
        assert config_in_collision(bench_arm, roadmap.nodes[n], snap)
    for n in list(np.nonzero(na)[0][:50]):
        assert not config_in_collision(bench_arm, roadmap.nodes[n], snap)


def test_prune_lookup_equals_direct_check(bench_arm, bench_roadmap, bench_grid, rng):
    """Lookup pruning equals direct geometric rechecking on random worlds."""
    roadmap, cmap = bench_roadmap
    for trial in range(10):
        lo = rng.uniform(-0.9, 0.6, size=2)
        hi = lo + rng.uniform(0.1, 0.4, size=2)
        world = box_world(bench_grid, [((lo[0], lo[1], -0.05), (hi[0], hi[1], 0.05))])
        na, _ = prune(roadmap, cmap, world)
        snap = WorldSnapshot.from_map(world)
        centers = sphere_centers_batch(bench_arm, roadmap.nodes)
        dist, _ = snap.tree.query(centers.reshape(-1, 3), k=1)
        hit = dist.reshape(len(roadmap.nodes), -1) <= (
            bench_arm.sphere_radius[None, :] + math.sqrt(3) / 2 * bench_grid.resolution
        )
        direct_active = ~np.any(hit, axis=1)
        assert np.array_equal(na, direct_active)


def test_prune_attached_body(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((0.55, 0.35, -0.05), (0.75, 0.55, 0.05))])
    na_bare, _ = prune(roadmap, cmap, world)
    attached = [(np.array([0.15, 0.0, 0.0]), 0.12)]  # carried item past the tool
    na_att, _ = prune(roadmap, cmap, world, attached=attached)
    assert na_att.sum() < na_bare.sum()
    assert np.all(~na_bare | na_bare)  # attached pruning only removes nodes
    assert np.all(na_att <= na_bare)


def test_plan_identity_query(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    start = np.array([1.2, -0.4])
    _, tool = forward_kinematics(bench_arm, start)
    path = plan_to_pose(roadmap, cmap, world, start, tool, PARAMS)
    assert len(path.waypoints) == 1
    assert np.allclose(path.waypoints[0], start)


def test_plan_fully_blocked_world(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((-1.2, -1.2, -0.1), (1.2, 1.2, 0.1))])
    with pytest.raises(StartInCollision):
        plan_to_pose(
            roadmap, cmap, world, np.array([0.5, 0.5]), pose_xyzyaw(0.8, 0, 0, 0), PARAMS
        )


def test_plan_start_in_collision(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((0.8, -0.2, -0.05), (1.0, 0.2, 0.05))])
    with pytest.raises(StartInCollision):
        plan_to_pose(
            roadmap, cmap, world, np.array([0.0, 0.0]), pose_xyzyaw(0, 0.9, 0, 0), PARAMS
        )


def test_plan_no_path_when_goal_region_blocked(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    # wall the target region in completely
    world = box_world(bench_grid, [((0.3, -0.6, -0.05), (1.1, 0.6, 0.05))])
    with pytest.raises(NoPath):
        plan_to_pose(
            roadmap, cmap, world, np.array([2.4, 0.3]), pose_xyzyaw(0.7, 0.0, 0, 0), PARAMS
        )


def test_plan_avoids_obstacle_and_validates(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((0.5, 0.3, -0.05), (0.7, 0.5, 0.05))])
    start = np.array([2.4, 0.3])
    target = pose_xyzyaw(0.0, -0.9, 0.0, 0.0)
    path = plan_to_pose(roadmap, cmap, world, start, target, PARAMS)
    assert np.allclose(path.waypoints[0], start)
    _, tool = forward_kinematics(bench_arm, path.waypoints[-1])
    assert np.linalg.norm(tool[:3, 3] - target[:3, 3]) <= PARAMS.pos_tol
    check = validate_path(path, world, bench_arm, step=PARAMS.step)
    assert check.ok


def test_plan_deterministic(bench_arm, bench_roadmap, bench_grid):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((0.5, 0.3, -0.05), (0.7, 0.5, 0.05))])
    a = plan_to_pose(roadmap, cmap, world, np.array([2.4, 0.3]), pose_xyzyaw(0, -0.9, 0, 0), PARAMS)
    b = plan_to_pose(roadmap, cmap, world, np.array([2.4, 0.3]), pose_xyzyaw(0, -0.9, 0, 0), PARAMS)
    assert np.array_equal(np.asarray(a.waypoints), np.asarray(b.waypoints))


def test_shortcut_straight_path_unchanged(bench_arm, bench_grid):
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    validator = make_segment_validator(bench_arm, world, step=0.02)
    path = JointPath(waypoints=np.array([[0.0, 0.0], [1.0, 0.5]]))
    out = shortcut(path, validator, iterations=50, seed=0)
    assert np.array_equal(out.waypoints, path.waypoints)


def test_shortcut_removes_collinear_middle(bench_arm, bench_grid):
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    validator = make_segment_validator(bench_arm, world, step=0.02)
    path = JointPath(waypoints=np.array([[0.0, 0.0], [0.5, 0.25], [1.0, 0.5]]))
    out = shortcut(path, validator, iterations=100, seed=1)
    assert len(out.waypoints) == 2
    assert out.length == pytest.approx(path.length)


def test_shortcut_reduces_detour(bench_arm, bench_grid, rng):
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    validator = make_segment_validator(bench_arm, world, step=0.02)
    wp = [np.zeros(2)]
    for _ in range(8):
        wp.append(wp[-1] + rng.uniform(-0.5, 0.5, size=2))
    path = JointPath(waypoints=np.asarray(wp))
    out = shortcut(path, validator, iterations=200, seed=2)
    assert out.length < path.length
    assert np.allclose(out.waypoints[0], path.waypoints[0])
    assert np.allclose(out.waypoints[-1], path.waypoints[-1])
    again = shortcut(path, validator, iterations=200, seed=2)
    assert np.array_equal(np.asarray(out.waypoints), np.asarray(again.waypoints))


def test_shortcut_never_lengthens_and_stays_valid(bench_arm, bench_roadmap, bench_grid, rng):
    roadmap, cmap = bench_roadmap
    world = box_world(bench_grid, [((0.5, 0.3, -0.05), (0.7, 0.5, 0.05))])
    params = PlanParams(pos_tol=1e-3, rot_tol=None, neighborhood_radius=0.2, step=0.02,
                        shortcut_iters=0)
    raw = plan_to_pose(roadmap, cmap, world, np.array([2.4, 0.3]),
                       pose_xyzyaw(0, -0.9, 0, 0), params)
    validator = make_segment_validator(bench_arm, world, step=0.02)
    cut = shortcut(raw, validator, iterations=300, seed=5)
    assert cut.length <= raw.length + 1e-12
    assert validate_path(cut, world, bench_arm, step=0.02).ok


def test_validate_path_flags_wall_segment(bench_arm, bench_grid):
    world = box_world(bench_grid, [((0.45, -0.2, -0.05), (0.75, 0.2, 0.05))])
    # segment 1 sweeps the arm straight through the wall
    path = JointPath(waypoints=np.array([[2.0, 0.5], [2.2, 0.3], [0.0, 0.0]]))
    check = validate_path(path, world, bench_arm, step=0.02)
    assert not check.ok
    assert check.violation_segment == 1
    assert check.reason == "world_collision"


def test_validate_path_flags_self_collision(bench_arm, bench_grid):
    world = VoxelMap(resolution=bench_grid.resolution, origin=np.asarray(bench_grid.origin))
    path = JointPath(waypoints=np.array([[0.0, 0.0], [0.0, math.pi - 1e-6]]))
    check = validate_path(path, world, bench_arm, step=0.02)
    assert not check.ok
    assert check.reason == "self_collision"


def test_validate_empty_and_single(bench_arm, bench_grid):
    world = box_world(bench_grid, [((0.45, -0.2, -0.05), (0.75, 0.2, 0.05))])
    assert validate_path(JointPath(waypoints=np.zeros((0, 2))), world, bench_arm).ok
    good = validate_path(JointPath(waypoints=np.array([[2.0, 0.5]])), world, bench_arm)
    assert good.ok
    bad = validate_path(JointPath(waypoints=np.array([[0.0, 0.0]])), world, bench_arm)
    assert not bad.ok
