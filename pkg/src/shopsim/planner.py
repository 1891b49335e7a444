"""Online side of the dynamic roadmap: voxel-lookup pruning, shortest-path
search to the target neighborhood, IK docking, shortcutting, and an
independent geometric path validator.

The validator re-checks paths directly against world voxels (never through
the precomputed collision map), so every returned plan is audited by a
second route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import ConfigError, IkFailure, NoPath, StartInCollision
from .kinematics import (
    HALF_DIAG,
    RobotModel,
    forward_kinematics,
    link_transforms_batch,
    self_collision_batch,
    solve_ik,
    sphere_centers_batch,
)
from .roadmap import CollisionMap, Roadmap, _batched_segments, segment_samples
from .transforms import rotation_angle
from .voxels import VoxelMap


@dataclass
class PlanParams:
    pos_tol: float = 1e-3
    rot_tol: float | None = None  # None: position-only docking
    neighborhood_radius: float = 0.15
    neighborhood_angle: float = 0.5
    start_links: int = 10
    step: float = 0.05  # segment discretization (rad)
    shortcut_iters: int = 50
    shortcut_seed: int = 0
    ik_iters: int = 100
    min_count: int = 1  # world occupancy threshold


@dataclass
class JointPath:
    """Straight-segment polyline in configuration space."""

    waypoints: np.ndarray  # (W, dof)

    @property
    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))


@dataclass
class PathCheck:
    ok: bool
    violation_segment: int | None = None
    reason: str | None = None


@dataclass
class WorldSnapshot:
    """Occupied-voxel view of a VoxelMap, ready for fast geometric queries."""

    resolution: float
    centers: np.ndarray  # (K, 3) occupied voxel centers
    tree: cKDTree | None = field(default=None, repr=False)

    @classmethod
    def from_map(cls, world: VoxelMap, min_count: int = 1) -> "WorldSnapshot":
        centers = world.occupied_centers(min_count)
        tree = cKDTree(centers) if len(centers) else None
        return cls(resolution=world.resolution, centers=centers, tree=tree)


def _attached_tool_spheres(attached) -> tuple[np.ndarray, np.ndarray]:
    if not attached:
        return np.zeros((0, 3)), np.zeros(0)
    centers = np.asarray([c for c, _ in attached], dtype=float)
    radii = np.asarray([r for _, r in attached], dtype=float)
    return centers, radii


def _world_collision_batch(
    model: RobotModel,
    Q: np.ndarray,
    snap: WorldSnapshot,
    attached=(),
) -> np.ndarray:
    """(M,) mask: sphere within radius + half voxel diagonal of an occupied
    voxel center. The same conservative predicate the collision map uses."""
    m = len(Q)
    if snap.tree is None or m == 0:
        return np.zeros(m, dtype=bool)
    half_diag = HALF_DIAG * snap.resolution
    centers = sphere_centers_batch(model, Q)  # (m, S, 3)
    radii = model.sphere_radius
    att_c, att_r = _attached_tool_spheres(attached)
    if len(att_r):
        tool = link_transforms_batch(model, Q)[-1] @ model.tool[None]
        att_world = np.einsum("mij,kj->mki", tool[:, :3, :3], att_c) + tool[:, None, :3, 3]
        centers = np.concatenate([centers, att_world], axis=1)
        radii = np.concatenate([radii, att_r])
    flat = centers.reshape(-1, 3)
    dist, _ = snap.tree.query(flat, k=1)
    hit = dist.reshape(m, -1) <= (radii[None, :] + half_diag)
    return np.any(hit, axis=1)


def config_in_collision(
    model: RobotModel, q: np.ndarray, snap: WorldSnapshot, attached=()
) -> bool:
    """Direct check of one configuration: world spheres plus self-collision."""
    Q = np.asarray(q, dtype=float)[None]
    if bool(self_collision_batch(model, Q)[0]):
        return True
    return bool(_world_collision_batch(model, Q, snap, attached)[0])


def segment_collision_free(
    model: RobotModel,
    qa: np.ndarray,
    qb: np.ndarray,
    snap: WorldSnapshot,
    attached=(),
    step: float = 0.05,
) -> bool:
    samples = segment_samples(np.asarray(qa, float), np.asarray(qb, float), step)
    if np.any(self_collision_batch(model, samples)):
        return False
    return not np.any(_world_collision_batch(model, samples, snap, attached))


def make_segment_validator(model, world_or_snap, attached=(), step: float = 0.05):
    """Bind a straight-segment validator for shortcutting."""
    snap = (
        world_or_snap
        if isinstance(world_or_snap, WorldSnapshot)
        else WorldSnapshot.from_map(world_or_snap)
    )
    return lambda qa, qb: segment_collision_free(model, qa, qb, snap, attached, step)


def prune(
    roadmap: Roadmap,
    cmap: CollisionMap,
    world: VoxelMap,
    attached=(),
    min_count: int = 1,
    edge_step: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Active node/edge masks for the current world.

    Nodes and edges listed by any occupied voxel go inactive (pure lookup).
    With attached bodies, survivors additionally get a geometric check of
    the attached spheres at node/edge sample configurations.
    """
    node_active = np.ones(roadmap.n_nodes, dtype=bool)
    edge_active = np.ones(roadmap.n_edges, dtype=bool)

    centers = world.occupied_centers(min_count)
    if len(centers):
        fids = np.unique(cmap.grid.locate(centers))
        fids = fids[fids >= 0]
        dead_nodes = [cmap.nodes_in_collision(f) for f in fids]
        dead_edges = [cmap.edges_in_collision(f) for f in fids]
        if dead_nodes:
            dn = np.concatenate(dead_nodes)
            if len(dn):
                node_active[dn] = False
        if dead_edges:
            de = np.concatenate(dead_edges)
            if len(de):
                edge_active[de] = False

    if attached:
        snap = WorldSnapshot.from_map(world, min_count)
        if snap.tree is not None:
            model = roadmap.model
            idx = np.nonzero(node_active)[0]
            if len(idx):
                hit = _attached_collision_at(model, roadmap.nodes[idx], snap, attached)
                node_active[idx[hit]] = False
            eidx = np.nonzero(edge_active)[0]
            for s in range(0, len(eidx), 2000):
                part = eidx[s : s + 2000]
                configs, owner = _batched_segments(
                    roadmap.nodes, roadmap.edges_u[part], roadmap.edges_v[part], edge_step
                )
                hit = _attached_collision_at(model, configs, snap, attached)
                bad = np.zeros(len(part), dtype=bool)
                np.logical_or.at(bad, owner[hit], True)
                edge_active[part[bad]] = False
    return node_active, edge_active


def _attached_collision_at(model, Q, snap: WorldSnapshot, attached) -> np.ndarray:
    att_c, att_r = _attached_tool_spheres(attached)
    tool = link_transforms_batch(model, Q)[-1] @ model.tool[None]
    pts = np.einsum("mij,kj->mki", tool[:, :3, :3], att_c) + tool[:, None, :3, 3]
    dist, _ = snap.tree.query(pts.reshape(-1, 3), k=1)
    bound = att_r[None, :] + HALF_DIAG * snap.resolution
    return np.any(dist.reshape(len(Q), -1) <= bound, axis=1)


def validate_path(
    path: JointPath,
    world: VoxelMap,
    model: RobotModel,
    attached=(),
    step: float = 0.05,
    min_count: int = 1,
) -> PathCheck:
    """Independently audit a path: sample every segment at <= step spacing and
    check sphere-vs-occupied-voxel and self-collision. First violation wins.
    """
    if step <= 0:
        raise ConfigError("step must be > 0")
    wp = np.asarray(path.waypoints, dtype=float)
    if len(wp) == 0:
        return PathCheck(ok=True)
    snap = WorldSnapshot.from_map(world, min_count)
    if len(wp) == 1:
        if config_in_collision(model, wp[0], snap, attached):
            return PathCheck(ok=False, violation_segment=0, reason="waypoint_in_collision")
        return PathCheck(ok=True)
    for i in range(len(wp) - 1):
        samples = segment_samples(wp[i], wp[i + 1], step)
        if np.any(self_collision_batch(model, samples)):
            return PathCheck(ok=False, violation_segment=i, reason="self_collision")
        if np.any(_world_collision_batch(model, samples, snap, attached)):
            return PathCheck(ok=False, violation_segment=i, reason="world_collision")
    return PathCheck(ok=True)


def shortcut(path: JointPath, validator, iterations: int, seed: int) -> JointPath:
    """Randomized straight-segment shortcutting; never increases length.

    `validator(qa, qb)` must approve each replacement segment. Deterministic
    for a fixed seed.
    """
    wp = [np.asarray(w, dtype=float) for w in path.waypoints]
    if len(wp) < 3:
        return JointPath(waypoints=np.asarray(wp).reshape(len(wp), -1))
    rng = np.random.default_rng(seed)
    for _ in range(iterations):
        if len(wp) < 3:
            break
        i, j = sorted(rng.choice(len(wp), size=2, replace=False))
        if j - i < 2:
            continue
        old = sum(
            float(np.linalg.norm(wp[k + 1] - wp[k])) for k in range(i, j)
        )
        new = float(np.linalg.norm(wp[j] - wp[i]))
        if new <= old + 1e-12 and validator(wp[i], wp[j]):
            wp = wp[: i + 1] + wp[j:]
    return JointPath(waypoints=np.asarray(wp))


def plan_to_pose(
    roadmap: Roadmap,
    cmap: CollisionMap,
    world: VoxelMap,
    start_q,
    target: np.ndarray,
    params: PlanParams | None = None,
    attached=(),
) -> JointPath:
    """Plan from start_q to an exact Cartesian tool pose.

    Prunes the roadmap by voxel lookup, links the start to its nearest
    active nodes, runs a shortest-path search to every node whose cached
    tool pose lies in the target neighborhood, docks candidates onto the
    exact target with the IK solver, and returns the shortest valid total.
    A final shortcutting pass and an independent validation audit run on
    the winner.
    """
    params = params or PlanParams()
    model = roadmap.model
    if model is None:
        raise ConfigError("roadmap has no robot model attached")
    start_q = np.asarray(start_q, dtype=float)
    target = np.asarray(target, dtype=float)
    snap = WorldSnapshot.from_map(world, params.min_count)

    if config_in_collision(model, start_q, snap, attached):
        raise StartInCollision("start configuration is in collision")

    # identity query: already at the target pose
    if _pose_close(model, start_q, target, params):
        return JointPath(waypoints=start_q[None, :].copy())

    node_active, edge_active = prune(
        roadmap, cmap, world, attached, params.min_count, params.step
    )
    if not np.any(node_active):
        raise NoPath("every roadmap node is pruned")

    goal_idx = _neighborhood(roadmap, target, params, node_active)
    if len(goal_idx) == 0:
        raise NoPath("no active roadmap node near the target pose")

    start_links = _connect_start(
        roadmap, start_q, node_active, snap, attached, params
    )
    if not start_links:
        raise NoPath("start could not be linked to any active node")

    dist, pred = _search(roadmap, node_active, edge_active, start_links)
    if not np.any(np.isfinite(dist[goal_idx])):
        raise NoPath("no active connection from start to the target neighborhood")
    order = np.argsort(dist[goal_idx], kind="stable")
    best = None  # (total, goal_node, dock_q)
    for gi in order:
        g = int(goal_idx[gi])
        d = float(dist[g])
        if not math.isfinite(d):
            break
        if best is not None and d >= best[0]:
            break  # docking only adds length; no later candidate can win
        try:
            dock = solve_ik(
                model,
                target,
                roadmap.nodes[g],
                pos_tol=params.pos_tol,
                rot_tol=params.rot_tol,
                max_iters=params.ik_iters,
            )
        except IkFailure:
            continue
        dock_len = float(np.linalg.norm(dock - roadmap.nodes[g]))
        if dock_len > 1e-12 and not segment_collision_free(
            model, roadmap.nodes[g], dock, snap, attached, params.step
        ):
            continue
        total = d + dock_len
        if best is None or total < best[0] - 1e-12:
            best = (total, g, dock)
    if best is None:
        raise NoPath("IK docking failed for every neighborhood node")

    _, goal_node, dock = best
    waypoints = [start_q]
    chain = _extract_chain(pred, goal_node, virtual_start=roadmap.n_nodes)
    waypoints.extend(roadmap.nodes[i] for i in chain)
    if np.linalg.norm(dock - waypoints[-1]) > 1e-12:
        waypoints.append(dock)
    path = JointPath(waypoints=np.asarray(waypoints))

    if params.shortcut_iters > 0:
        validator = lambda qa, qb: segment_collision_free(
            model, qa, qb, snap, attached, params.step
        )
        path = shortcut(path, validator, params.shortcut_iters, params.shortcut_seed)

    audit = validate_path(path, world, model, attached, params.step, params.min_count)
    if not audit.ok:
        raise NoPath(f"planned path failed validation ({audit.reason})")
    return path


def _pose_close(model, q, target, params: PlanParams) -> bool:
    _, tool = forward_kinematics(model, q)
    if np.linalg.norm(tool[:3, 3] - target[:3, 3]) > params.pos_tol:
        return False
    if params.rot_tol is None:
        return True
    return rotation_angle(target[:3, :3], tool[:3, :3]) <= params.rot_tol


def _neighborhood(roadmap, target, params: PlanParams, node_active) -> np.ndarray:
    pos = roadmap.node_tool_poses[:, :3, 3]
    near = np.linalg.norm(pos - target[:3, 3][None, :], axis=1) <= params.neighborhood_radius
    near &= node_active
    if params.rot_tol is not None:
        rot = roadmap.node_tool_poses[:, :3, :3]
        tr = np.einsum("nij,ij->n", rot, target[:3, :3])
        ang = np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
        near &= ang <= params.neighborhood_angle
    return np.nonzero(near)[0]


def _connect_start(roadmap, start_q, node_active, snap, attached, params: PlanParams):
    """Collision-checked straight links from the start to nearby active nodes."""
    k = min(params.start_links * 4, roadmap.n_nodes)
    _, nbrs = roadmap.kdtree.query(start_q, k=k)
    nbrs = np.atleast_1d(nbrs)
    links = []
    for n in nbrs:
        n = int(n)
        if not node_active[n]:
            continue
        if segment_collision_free(
            roadmap.model, start_q, roadmap.nodes[n], snap, attached, params.step
        ):
            links.append((n, float(np.linalg.norm(roadmap.nodes[n] - start_q))))
        if len(links) >= params.start_links:
            break
    return links


def _search(roadmap, node_active, edge_active, start_links):
    """Dijkstra from a virtual start node over the active subgraph."""
    n = roadmap.n_nodes
    ea = np.concatenate([edge_active, edge_active])
    keep = (
        ea
        & node_active[roadmap._adj_rows]
        & node_active[roadmap._adj_cols]
    )
    rows = roadmap._adj_rows[keep]
    cols = roadmap._adj_cols[keep]
    w = roadmap._adj_w[keep]
    s_rows = np.full(len(start_links), n, dtype=np.int64)
    s_cols = np.array([i for i, _ in start_links], dtype=np.int64)
    s_w = np.array([d for _, d in start_links], dtype=float)
    graph = csr_matrix(
        (
            np.concatenate([w, s_w]),
            (np.concatenate([rows, s_rows]), np.concatenate([cols, s_cols])),
        ),
        shape=(n + 1, n + 1),
    )
    dist, pred = dijkstra(graph, directed=True, indices=n, return_predecessors=True)
    return dist, pred


def _extract_chain(pred, goal, virtual_start):
    chain = []
    cur = int(goal)
    while cur != virtual_start and cur >= 0:
        chain.append(cur)
        cur = int(pred[cur])
    chain.reverse()
    return chain
