import math

import numpy as np
import pytest

from oracles import brute_robot_voxels, brute_self_collision, fd_jacobian, naive_fk
from shopsim.demo import planar_arm, shelf_arm
from shopsim.errors import ConfigError, DimensionError, IkFailure
from shopsim.kinematics import (
    Joint,
    RobotModel,
    forward_kinematics,
    jacobian,
    load_robot,
    robot_from_dict,
    robot_voxels,
    save_robot,
    self_collision,
    solve_ik,
)
from shopsim.transforms import is_rigid, pose_xyzyaw, translation


@pytest.fixture(scope="module")
def arm2r():
    return planar_arm(link_lengths=(1.0, 1.0), sphere_radius=0.05)


def test_fk_straight_chain(arm2r):
    _, tool = forward_kinematics(arm2r, [0.0, 0.0])
    assert np.allclose(tool[:3, 3], [2.0, 0.0, 0.0])


def test_fk_quarter_turn(arm2r):
    _, tool = forward_kinematics(arm2r, [math.pi / 2, 0.0])
    assert np.allclose(tool[:3, 3], [0.0, 2.0, 0.0], atol=1e-12)


def test_fk_matches_naive_oracle(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    for _ in range(50):
        q = rng.uniform(lo, hi)
        _, tool = forward_kinematics(model, q)
        assert np.allclose(tool, naive_fk(model, q), atol=1e-10)


def test_fk_rigid_transforms(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    for _ in range(20):
        q = rng.uniform(lo, hi)
        links, tool = forward_kinematics(model, q)
        for T in links + [tool]:
            assert is_rigid(T)


def test_fk_dimension_mismatch(arm2r):
    with pytest.raises(DimensionError):
        forward_kinematics(arm2r, [0.0, 0.0, 0.0])


def test_planar_base_joint_fk():
    base = Joint(
        kind="planar",
        origin=np.eye(4),
        limits=np.array([[-5, 5], [-5, 5], [-math.pi, math.pi]]),
    )
    model = RobotModel(
        joints=[base], spheres=[[(np.zeros(3), 0.1)]], tool=translation(1, 0, 0)
    )
    _, tool = forward_kinematics(model, [2.0, 1.0, math.pi / 2])
    assert np.allclose(tool[:3, 3], [2.0, 2.0, 0.0], atol=1e-12)


def test_jacobian_2r_analytic(arm2r):
    J = jacobian(arm2r, [0.0, 0.0])
    assert J[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert J[1, 0] == pytest.approx(2.0)
    assert J[1, 1] == pytest.approx(1.0)


def test_jacobian_matches_finite_differences(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    for _ in range(100):
        q = rng.uniform(lo, hi)
        J = jacobian(model, q)
        J_fd = fd_jacobian(model, q)
        denom = max(1.0, np.linalg.norm(J_fd))
        assert np.linalg.norm(J - J_fd) / denom < 1e-3


def test_jacobian_prismatic_has_zero_angular():
    joints = [
        Joint(kind="prismatic", origin=np.eye(4), axis=np.array([0.0, 0.0, 1.0]),
              limits=np.array([[0.0, 1.0]])),
    ]
    model = RobotModel(joints=joints, spheres=[[(np.zeros(3), 0.05)]], tool=np.eye(4))
    J = jacobian(model, [0.5])
    assert np.allclose(J[3:, 0], 0.0)
    assert np.allclose(J[:3, 0], [0, 0, 1])


def test_jacobian_planar_base(rng):
    base = Joint(
        kind="planar",
        origin=np.eye(4),
        limits=np.array([[-5, 5], [-5, 5], [-math.pi, math.pi]]),
    )
    arm = Joint(
        kind="revolute",
        origin=translation(0.2, 0, 0.3),
        axis=np.array([0.0, 0.0, 1.0]),
        limits=np.array([[-3, 3]]),
    )
    model = RobotModel(
        joints=[base, arm],
        spheres=[[(np.zeros(3), 0.1)], [(np.array([0.3, 0, 0]), 0.05)]],
        tool=translation(0.5, 0, 0),
    )
    for _ in range(25):
        q = rng.uniform(model.lower_limits(), model.upper_limits())
        J = jacobian(model, q)
        J_fd = fd_jacobian(model, q)
        assert np.linalg.norm(J - J_fd) / max(1.0, np.linalg.norm(J_fd)) < 1e-3


def test_ik_2r_benchmark(arm2r):
    target = pose_xyzyaw(1.0, 1.0, 0.0, 0.0)
    q = solve_ik(arm2r, target, [0.1, 0.1], pos_tol=1e-7, rot_tol=None, max_iters=300)
    _, tool = forward_kinematics(arm2r, q)
    assert np.linalg.norm(tool[:3, 3] - [1.0, 1.0, 0.0]) < 1e-6
    # elbow solution: cos(q2) = 0
    assert abs(math.cos(q[1])) < 1e-5
    assert arm2r.within_limits(q)


def test_ik_unreachable_fails(arm2r):
    target = pose_xyzyaw(3.0, 0.0, 0.0, 0.0)
    with pytest.raises(IkFailure):
        solve_ik(arm2r, target, [0.1, 0.1], pos_tol=1e-6, rot_tol=None, max_iters=150)


def test_ik_fixed_point(arm2r, rng):
    for _ in range(10):
        q0 = rng.uniform(arm2r.lower_limits(), arm2r.upper_limits())
        _, tool = forward_kinematics(arm2r, q0)
        q = solve_ik(arm2r, tool, q0, pos_tol=1e-9, rot_tol=None, max_iters=3)
        assert np.allclose(q, q0)


def test_ik_full_pose(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    hits = 0
    for _ in range(20):
        q0 = model.clamp(rng.uniform(lo * 0.7, hi * 0.7))
        _, target = forward_kinematics(model, q0)
        seed = model.clamp(q0 + rng.normal(0, 0.1, size=model.dof))
        try:
            q = solve_ik(model, target, seed, pos_tol=1e-5, rot_tol=1e-3, max_iters=300)
        except IkFailure:
            continue
        hits += 1
        _, tool = forward_kinematics(model, q)
        assert np.linalg.norm(tool[:3, 3] - target[:3, 3]) <= 1e-5
        assert model.within_limits(q)
    assert hits >= 15  # near-seed full-pose queries overwhelmingly succeed


def test_ik_rejects_bad_tolerances(arm2r):
    with pytest.raises(ConfigError):
        solve_ik(arm2r, np.eye(4), [0, 0], pos_tol=0.0)


def test_robot_voxels_matches_brute_force(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    origin = np.array([-1.5, -1.5, -0.5])
    for _ in range(5):
        q = rng.uniform(lo, hi)
        got = robot_voxels(model, q, origin, 0.1)
        assert got == brute_robot_voxels(model, q, origin, 0.1)


def test_robot_voxels_single_sphere_neighbors():
    joints = [
        Joint(kind="revolute", origin=np.eye(4), axis=np.array([0.0, 0.0, 1.0]),
              limits=np.array([[-1.0, 1.0]])),
    ]
    model = RobotModel(joints=joints, spheres=[[(np.zeros(3), 0.04)]], tool=np.eye(4))
    origin = np.array([-0.05, -0.05, -0.05])  # sphere center mid-voxel of (0,0,0)
    got = robot_voxels(model, [0.0], origin, 0.1)
    assert (0, 0, 0) in got
    for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
        assert d in got
    assert (1, 1, 1) not in got  # corner neighbor is beyond the conservative bound
    assert got == brute_robot_voxels(model, [0.0], origin, 0.1)


def test_robot_voxels_translation_equivariance():
    joints = [
        Joint(kind="prismatic", origin=np.eye(4), axis=np.array([1.0, 0.0, 0.0]),
              limits=np.array([[-2.0, 2.0]])),
    ]
    model = RobotModel(joints=joints, spheres=[[(np.zeros(3), 0.04)]], tool=np.eye(4))
    origin = np.array([-1.0, -1.0, -1.0])
    base = robot_voxels(model, [0.0], origin, 0.1)
    shifted = robot_voxels(model, [0.3], origin, 0.1)  # exactly 3 voxels along x
    assert shifted == {(i + 3, j, k) for i, j, k in base}


def test_robot_voxels_empty_geometry():
    joints = [
        Joint(kind="revolute", origin=np.eye(4), axis=np.array([0.0, 0.0, 1.0]),
              limits=np.array([[-1.0, 1.0]])),
    ]
    model = RobotModel(joints=joints, spheres=[[]], tool=np.eye(4))
    assert robot_voxels(model, [0.0], np.zeros(3), 0.1) == set()


def test_self_collision_folded_2r():
    model = planar_arm(link_lengths=(0.5, 0.5), sphere_radius=0.06)
    assert self_collision(model, [0.0, math.pi - 1e-6])
    assert not self_collision(model, [0.0, 0.0])


def test_self_collision_matches_brute_force(rng):
    model = shelf_arm()
    lo, hi = model.lower_limits(), model.upper_limits()
    agree = 0
    for _ in range(200):
        q = rng.uniform(lo, hi)
        assert self_collision(model, q) == brute_self_collision(model, q)
        agree += 1
    assert agree == 200


def test_robot_json_round_trip(tmp_path):
    model = shelf_arm()
    path = tmp_path / "robot.json"
    save_robot(model, path)
    loaded = load_robot(path)
    assert loaded.dof == model.dof
    assert len(loaded.sphere_radius) == len(model.sphere_radius)
    q = np.array([0.3, -0.5, 1.0, 0.2])
    _, t1 = forward_kinematics(model, q)
    _, t2 = forward_kinematics(loaded, q)
    assert np.allclose(t1, t2, atol=1e-12)


def test_robot_from_dict_rejects_bad_limits():
    with pytest.raises(ConfigError):
        robot_from_dict(
            {
                "joints": [
                    {"type": "revolute", "axis": [0, 0, 1], "limits": [1.0, -1.0]}
                ],
                "spheres": [],
            }
        )
