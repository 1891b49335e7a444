"""Plan collision-free arm motions with the dynamic roadmap: precompute the
roadmap + voxel collision index once, then answer queries against changing
worlds by lookup pruning.

Run:  python3 demos/arm_planning.py
"""

import time

import numpy as np

from shopsim.demo import planar_arm
from shopsim.errors import NoPath
from shopsim.kinematics import forward_kinematics
from shopsim.planner import PlanParams, plan_to_pose, prune, validate_path
from shopsim.roadmap import GridSpec, build_collision_map, build_roadmap
from shopsim.transforms import pose_xyzyaw
from shopsim.voxels import VoxelMap, voxel_insert_points

arm = planar_arm(link_lengths=(0.5, 0.5), sphere_radius=0.06)

print("offline: sampling the roadmap and indexing it against the workspace grid")
t0 = time.perf_counter()
roadmap = build_roadmap(arm, n_nodes=2000, k_neighbors=8, seed=3)
grid = GridSpec(origin=(-1.3, -1.3, -0.1), resolution=0.05, dims=(52, 52, 4))
cmap = build_collision_map(roadmap, arm, grid, edge_step=0.05)
print(
    f"  {roadmap.n_nodes} nodes, {roadmap.n_edges} edges, "
    f"{len(cmap.edge_ids)} voxel->edge entries in {time.perf_counter() - t0:.1f} s"
)

# drop a box obstacle into the world; no geometry rechecks needed online
world = VoxelMap(resolution=0.05, origin=np.asarray(grid.origin))
xs, ys = np.meshgrid(np.arange(0.5, 0.71, 0.025), np.arange(0.3, 0.51, 0.025))
voxel_insert_points(world, np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1))

node_active, edge_active = prune(roadmap, cmap, world)
print(
    f"\nonline: lookup pruning kept {node_active.sum()}/{roadmap.n_nodes} nodes, "
    f"{edge_active.sum()}/{roadmap.n_edges} edges"
)

start = np.array([2.4, 0.3])
target = pose_xyzyaw(0.0, -0.9, 0.0, 0.0)
params = PlanParams(pos_tol=1e-3, rot_tol=None, neighborhood_radius=0.2, step=0.02)
t0 = time.perf_counter()
path = plan_to_pose(roadmap, cmap, world, start, target, params)
ms = (time.perf_counter() - t0) * 1e3
_, tool = forward_kinematics(arm, path.waypoints[-1])
print(f"query answered in {ms:.1f} ms:")
for q in path.waypoints:
    print(f"  q = ({q[0]: .3f}, {q[1]: .3f})")
print(f"tool reaches {np.round(tool[:3, 3], 4)} (target {np.round(target[:3, 3], 4)})")

check = validate_path(path, world, arm, step=0.02)
print(f"independent validator: {'Ok' if check.ok else check}")

# a world that buries the target is a NoPath result, not a crash
blocked = VoxelMap(resolution=0.05, origin=np.asarray(grid.origin))
xs, ys = np.meshgrid(np.arange(-0.6, 0.61, 0.025), np.arange(-1.15, -0.55, 0.025))
voxel_insert_points(blocked, np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1))
try:
    plan_to_pose(roadmap, cmap, blocked, start, target, params)
except NoPath as exc:
    print(f"\nburied target: NoPath ({exc})")
