"""Sparse voxel world, 2.5D elevation map, and inflated occupancy grid.

The voxel map is the sole collision environment: each occupied cell keeps
running first/second-order position statistics and a mean color for the
points fused into it. The elevation and occupancy grids are derived views
used by base navigation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPoint, InvalidRange

EMPTY_HEIGHT = -math.inf


@dataclass
class VoxelCell:
    """Running statistics for the points accumulated in one voxel."""

    count: int = 0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    second_moment: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    mean_color: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def add(self, point: np.ndarray, color: np.ndarray) -> None:
        self.count += 1
        self.mean = self.mean + (point - self.mean) / self.count
        self.second_moment = self.second_moment + (
            np.outer(point, point) - self.second_moment
        ) / self.count
        self.mean_color = self.mean_color + (color - self.mean_color) / self.count

    def covariance(self) -> np.ndarray:
        return self.second_moment - np.outer(self.mean, self.mean)


@dataclass
class VoxelMap:
    """Sparse 3D occupancy map keyed by integer voxel index.

    A point p maps to index floor((p - origin) / resolution) componentwise.
    """

    resolution: float = 0.05
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cells: dict[tuple[int, int, int], VoxelCell] = field(default_factory=dict)

    def __post_init__(self):
        if self.resolution <= 0:
            raise InvalidRange(f"resolution must be > 0, got {self.resolution}")
        self.origin = np.asarray(self.origin, dtype=float)

    def index_of(self, point) -> tuple[int, int, int]:
        idx = np.floor((np.asarray(point, dtype=float) - self.origin) / self.resolution)
        return (int(idx[0]), int(idx[1]), int(idx[2]))

    def center_of(self, index) -> np.ndarray:
        return self.origin + (np.asarray(index, dtype=float) + 0.5) * self.resolution

    def occupied_indices(self, min_count: int = 1) -> list[tuple[int, int, int]]:
        return [k for k, c in self.cells.items() if c.count >= min_count]

    def occupied_centers(self, min_count: int = 1) -> np.ndarray:
        """(N, 3) array of occupied voxel centers."""
        idx = self.occupied_indices(min_count)
        if not idx:
            return np.zeros((0, 3))
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution


def voxel_insert(vmap: VoxelMap, points) -> VoxelMap:
    """Fuse colored points into the map as exact running statistics.

    `points` is an iterable of (xyz, rgb) pairs; rgb components in [0, 1].
    Non-finite coordinates raise InvalidPoint before any mutation of the
    offending point's cell.
    """
    for point, color in points:
        p = np.asarray(point, dtype=float)
        c = np.asarray(color, dtype=float)
        if not np.all(np.isfinite(p)):
            raise InvalidPoint(f"non-finite point {p}")
        cell = vmap.cells.get(vmap.index_of(p))
        if cell is None:
            cell = VoxelCell()
            vmap.cells[vmap.index_of(p)] = cell
        cell.add(p, c)
    return vmap


def voxel_insert_points(vmap: VoxelMap, xyz: np.ndarray, color=(0.5, 0.5, 0.5)) -> VoxelMap:
    """Convenience wrapper: insert uncolored geometry points."""
    c = np.asarray(color, dtype=float)
    return voxel_insert(vmap, ((p, c) for p in np.asarray(xyz, dtype=float)))


def voxel_occupied(vmap: VoxelMap, index, min_count: int = 1) -> bool:
    """True iff the cell exists and holds at least min_count points."""
    cell = vmap.cells.get(tuple(int(i) for i in index))
    return cell is not None and cell.count >= min_count


@dataclass
class ElevationGrid:
    """Dense 2D grid of per-column maximum heights (EMPTY_HEIGHT if none)."""

    resolution: float
    origin: np.ndarray  # (2,) lower-left corner in world xy
    heights: np.ndarray  # (nx, ny) float

    def cell_of(self, xy) -> tuple[int, int]:
        idx = np.floor((np.asarray(xy, dtype=float) - self.origin) / self.resolution)
        return (int(idx[0]), int(idx[1]))

    def center_of(self, cell) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=float) + 0.5) * self.resolution


@dataclass
class OccupancyGrid:
    """Binary free/occupied grid for base navigation."""

    resolution: float
    origin: np.ndarray  # (2,)
    occupied: np.ndarray  # (nx, ny) bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupied.shape

    def cell_of(self, xy) -> tuple[int, int]:
        idx = np.floor((np.asarray(xy, dtype=float) - self.origin) / self.resolution)
        return (int(idx[0]), int(idx[1]))

    def center_of(self, cell) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=float) + 0.5) * self.resolution

    def in_bounds(self, cell) -> bool:
        i, j = cell
        nx, ny = self.occupied.shape
        return 0 <= i < nx and 0 <= j < ny

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.occupied[cell[0], cell[1]]


def derive_elevation(
    vmap: VoxelMap,
    z_min: float,
    z_max: float,
    cell_res: float,
    bounds=None,
    min_count: int = 1,
) -> ElevationGrid:
    """Project the voxel map to a 2.5D per-column max-height grid.

    A voxel participates when its top face (origin_z + (iz+1) * resolution)
    lies in (z_min, z_max]. The column height is the maximum participating
    top face, or EMPTY_HEIGHT for untouched columns.

    `bounds` optionally fixes the grid extent as ((xmin, ymin), (xmax, ymax));
    by default the extent covers all occupied voxels.
    """
    if z_min >= z_max:
        raise InvalidRange(f"z_min {z_min} must be < z_max {z_max}")
    if cell_res <= 0:
        raise InvalidRange(f"cell_res must be > 0, got {cell_res}")

    centers = vmap.occupied_centers(min_count)
    if bounds is None:
        if centers.shape[0] == 0:
            lo = np.zeros(2)
            hi = np.array([cell_res, cell_res])
        else:
            lo = centers[:, :2].min(axis=0) - vmap.resolution
            hi = centers[:, :2].max(axis=0) + vmap.resolution
    else:
        lo = np.asarray(bounds[0], dtype=float)
        hi = np.asarray(bounds[1], dtype=float)

    nx = max(1, int(math.ceil((hi[0] - lo[0]) / cell_res)))
    ny = max(1, int(math.ceil((hi[1] - lo[1]) / cell_res)))
    heights = np.full((nx, ny), EMPTY_HEIGHT)

    grid = ElevationGrid(resolution=cell_res, origin=lo, heights=heights)
    for (ix, iy, iz), cell in vmap.cells.items():
        if cell.count < min_count:
            continue
        top = vmap.origin[2] + (iz + 1) * vmap.resolution
        if not (z_min < top <= z_max):
            continue
        cx = vmap.origin[0] + (ix + 0.5) * vmap.resolution
        cy = vmap.origin[1] + (iy + 0.5) * vmap.resolution
        i, j = grid.cell_of((cx, cy))
        if 0 <= i < nx and 0 <= j < ny and top > heights[i, j]:
            heights[i, j] = top
    return grid


def inflate(elev: ElevationGrid, obstacle_height: float, robot_radius: float) -> OccupancyGrid:
    """Dilate thresholded elevation obstacles by the robot radius.

    A cell is occupied iff its center lies within Euclidean distance
    robot_radius (inclusive) of the center of any cell whose height exceeds
    obstacle_height.
    """
    if robot_radius < 0:
        raise InvalidRange(f"robot_radius must be >= 0, got {robot_radius}")
    obstacles = elev.heights > obstacle_height
    occupied = np.zeros_like(obstacles)

    reach = int(math.floor(robot_radius / elev.resolution + 1e-9))
    offsets = [
        (di, dj)
        for di in range(-reach, reach + 1)
        for dj in range(-reach, reach + 1)
        if math.hypot(di, dj) * elev.resolution <= robot_radius + 1e-12
    ]
    nx, ny = obstacles.shape
    for di, dj in offsets:
        src = obstacles[
            max(0, -di) : nx - max(0, di),
            max(0, -dj) : ny - max(0, dj),
        ]
        occupied[
            max(0, di) : nx - max(0, -di),
            max(0, dj) : ny - max(0, -dj),
        ] |= src
    return OccupancyGrid(resolution=elev.resolution, origin=elev.origin.copy(), occupied=occupied)
