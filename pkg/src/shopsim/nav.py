"""Base-level navigation: item goal poses, 8-connected grid A*, and the
pairwise cost matrix feeding the tour planner.

Grid path costs are octile: straight moves cost one cell, diagonals sqrt(2)
cells, scaled by the grid resolution. Costs are accumulated as integer
(straight, diagonal) counts so two planners computing the same optimum
report bit-identical floats.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import GoalBlocked, InvalidEndpoint, NoPath, InvalidRange
from .store import ItemRecord
from .transforms import normalize_angle
from .voxels import OccupancyGrid

SQRT2 = math.sqrt(2.0)

# 8-connected moves: (di, dj, diagonal?)
_MOVES = (
    (1, 0, False),
    (-1, 0, False),
    (0, 1, False),
    (0, -1, False),
    (1, 1, True),
    (1, -1, True),
    (-1, 1, True),
    (-1, -1, True),
)


@dataclass
class BasePose:
    x: float
    y: float
    yaw: float

    def __post_init__(self):
        self.yaw = normalize_angle(self.yaw)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def distance_to(self, other: "BasePose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def item_goal_pose(
    item: ItemRecord,
    grid: OccupancyGrid,
    standoff_min: float,
    standoff_max: float,
) -> BasePose:
    """First free base pose along the item's outward axis, facing the item.

    Standoffs are scanned outward from the item at the grid resolution; the
    cell must be free in the inflated grid. GoalBlocked when the whole range
    is occupied or out of bounds.
    """
    if standoff_min >= standoff_max:
        raise InvalidRange("standoff_min must be < standoff_max")
    s = standoff_min
    while s <= standoff_max + 1e-12:
        pos = item.xy + s * item.outward_axis
        cell = grid.cell_of(pos)
        if grid.is_free(cell):
            yaw = math.atan2(item.xy[1] - pos[1], item.xy[0] - pos[0])
            return BasePose(x=float(pos[0]), y=float(pos[1]), yaw=yaw)
        s += grid.resolution
    raise GoalBlocked(f"no free standoff for item {item.id} in [{standoff_min}, {standoff_max}]")


def _octile_h(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    """Heuristic as (straight, diagonal) move counts."""
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return (max(dx, dy) - min(dx, dy), min(dx, dy))


def _cost(counts: tuple[int, int], res: float) -> float:
    return (counts[0] + counts[1] * SQRT2) * res


def grid_plan(
    grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]
) -> tuple[np.ndarray, float]:
    """8-connected A* between grid cells.

    Diagonal moves are disallowed when both adjacent orthogonal cells are
    blocked (no corner cutting). Returns (world waypoints of the cell
    centers, metric cost). Raises InvalidEndpoint / NoPath.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    for name, cell in (("start", start), ("goal", goal)):
        if not grid.is_free(cell):
            raise InvalidEndpoint(f"{name} cell {cell} is occupied or out of bounds")
    res = grid.resolution
    if start == goal:
        return grid.center_of(start)[None, :], 0.0

    g: dict[tuple[int, int], tuple[int, int]] = {start: (0, 0)}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    h0 = _octile_h(start, goal)
    open_heap = [(_cost(h0, res), 0, start)]
    tie = 0
    closed = set()
    while open_heap:
        _, _, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        if cur == goal:
            break
        closed.add(cur)
        gs, gd = g[cur]
        for di, dj, diag in _MOVES:
            nxt = (cur[0] + di, cur[1] + dj)
            if not grid.is_free(nxt):
                continue
            if diag and not (
                grid.is_free((cur[0] + di, cur[1])) or grid.is_free((cur[0], cur[1] + dj))
            ):
                continue
            cand = (gs, gd + 1) if diag else (gs + 1, gd)
            if nxt not in g or _cost(cand, res) < _cost(g[nxt], res):
                g[nxt] = cand
                came[nxt] = cur
                h = _octile_h(nxt, goal)
                f = _cost((cand[0] + h[0], cand[1] + h[1]), res)
                tie += 1
                heapq.heappush(open_heap, (f, tie, nxt))
    if goal not in g:
        raise NoPath(f"no grid path from {start} to {goal}")

    cells = [goal]
    while cells[-1] != start:
        cells.append(came[cells[-1]])
    cells.reverse()
    waypoints = np.array([grid.center_of(c) for c in cells])
    return waypoints, _cost(g[goal], res)


def decimate_collinear(waypoints: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Drop interior waypoints that lie on the segment between their neighbors."""
    wp = np.asarray(waypoints, dtype=float)
    if len(wp) <= 2:
        return wp
    keep = [0]
    for i in range(1, len(wp) - 1):
        a, b, c = wp[keep[-1]], wp[i], wp[i + 1]
        ab = b - a
        ac = c - a
        cross = ab[0] * ac[1] - ab[1] * ac[0]
        if abs(cross) > tol:
            keep.append(i)
    keep.append(len(wp) - 1)
    return wp[keep]


def grid_cost_matrix(grid: OccupancyGrid, cells: list[tuple[int, int]]) -> np.ndarray:
    """Symmetric matrix of grid_plan costs between cells (inf if unreachable)."""
    n = len(cells)
    costs = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            try:
                _, c = grid_plan(grid, cells[i], cells[j])
            except (NoPath, InvalidEndpoint):
                c = math.inf
            costs[i, j] = c
            costs[j, i] = c
    return costs


def pairwise_costs(grid: OccupancyGrid, poses: list[BasePose]) -> np.ndarray:
    """Pairwise shortest-path costs between base poses (index 0 = start)."""
    cells = [grid.cell_of((p.x, p.y)) for p in poses]
    for p, c in zip(poses, cells):
        if not grid.is_free(c):
            raise InvalidEndpoint(f"pose ({p.x:.2f}, {p.y:.2f}) lies on an occupied cell")
    return grid_cost_matrix(grid, cells)
