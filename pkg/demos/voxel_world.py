"""Build a voxel world from raw points, derive the 2.5D elevation map, and
inflate it into the navigation grid.

Run:  python3 demos/voxel_world.py
"""

import numpy as np

from shopsim.voxels import VoxelMap, derive_elevation, inflate, voxel_insert

rng = np.random.default_rng(7)

# fuse a noisy "scan" of a box sitting on the floor
vmap = VoxelMap(resolution=0.05, origin=np.zeros(3))
floor = np.stack(
    [rng.uniform(0, 2, 4000), rng.uniform(0, 2, 4000), rng.uniform(0, 0.02, 4000)], axis=1
)
box = np.stack(
    [rng.uniform(0.8, 1.2, 2000), rng.uniform(0.9, 1.1, 2000), rng.uniform(0, 0.5, 2000)],
    axis=1,
)
colors = ((0.7, 0.7, 0.7), (0.9, 0.3, 0.2))
for cloud, color in zip((floor, box), colors):
    voxel_insert(vmap, ((p, color) for p in cloud))

print(f"fused {len(floor) + len(box)} points into {len(vmap.cells)} voxels")
sample = vmap.cells[vmap.index_of((1.0, 1.0, 0.25))]
print(f"one box voxel: count={sample.count}, mean={np.round(sample.mean, 3)}")
print(f"  position covariance eigenvalues: {np.round(np.linalg.eigvalsh(sample.covariance()), 6)}")

# 2.5D projection: per-column max height above the floor band
elev = derive_elevation(vmap, z_min=0.05, z_max=2.0, cell_res=0.05)
heights = elev.heights
print(f"\nelevation grid {heights.shape}, max height {np.max(heights):.2f} m")

# dilate by the robot radius so the base can plan as a point
grid = inflate(elev, obstacle_height=0.02, robot_radius=0.3)
occupied = grid.occupied
print(f"inflated occupancy: {occupied.sum()} of {occupied.size} cells blocked")

# crude terminal picture (x across, y down)
step = max(1, occupied.shape[0] // 40)
for j in range(occupied.shape[1] - 1, -1, -4 * step):
    row = "".join("#" if occupied[i, j] else "." for i in range(0, occupied.shape[0], step))
    print(row)
