"""Offline side of the dynamic roadmap: configuration-space graph sampling,
voxel->nodes/edges collision indexing, and versioned binary persistence.

The collision map is precomputed once per robot against a fixed workspace
grid, so that online queries can invalidate nodes and edges by table lookup
when the world changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, SamplingExhausted
from .kinematics import (
    HALF_DIAG,
    RobotModel,
    link_transforms_batch,
    self_collision_batch,
    sphere_centers_batch,
)

ROADMAP_MAGIC = b"SSRM"
ROADMAP_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    """Workspace voxel grid: origin corner, cubic resolution, cell counts."""

    origin: tuple[float, float, float]
    resolution: float
    dims: tuple[int, int, int]

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def flat_ids(self, indices: np.ndarray) -> np.ndarray:
        """Flatten (N, 3) integer indices; out-of-grid rows map to -1."""
        nx, ny, nz = self.dims
        ok = np.all((indices >= 0) & (indices < np.array(self.dims)), axis=1)
        flat = indices[:, 0] + nx * (indices[:, 1] + ny * indices[:, 2])
        return np.where(ok, flat, -1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Flat voxel ids of (N, 3) world points (-1 outside the grid)."""
        idx = np.floor(
            (np.asarray(points, dtype=float) - np.asarray(self.origin)) / self.resolution
        ).astype(int)
        return self.flat_ids(idx)


def grid_for_model(model: RobotModel, resolution: float, margin: float = 0.1) -> GridSpec:
    """Grid spec covering everything the robot's spheres can reach."""
    reach = model.max_reach() + HALF_DIAG * resolution + margin
    n = int(math.ceil(2 * reach / resolution))
    origin = (-reach, -reach, -reach)
    return GridSpec(origin=origin, resolution=resolution, dims=(n, n, n))


@dataclass
class Roadmap:
    """Sampled configuration-space graph with cached tool poses."""

    nodes: np.ndarray  # (N, dof)
    edges_u: np.ndarray  # (E,) canonical u < v
    edges_v: np.ndarray  # (E,)
    edge_lengths: np.ndarray  # (E,)
    node_tool_poses: np.ndarray  # (N, 4, 4)
    model: RobotModel | None = None

    kdtree: cKDTree = field(init=False, repr=False)
    _adj_rows: np.ndarray = field(init=False, repr=False)
    _adj_cols: np.ndarray = field(init=False, repr=False)
    _adj_w: np.ndarray = field(init=False, repr=False)
    _adj_eid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.kdtree = cKDTree(self.nodes) if len(self.nodes) else None
        eid = np.arange(len(self.edges_u), dtype=np.int64)
        self._adj_rows = np.concatenate([self.edges_u, self.edges_v])
        self._adj_cols = np.concatenate([self.edges_v, self.edges_u])
        self._adj_w = np.concatenate([self.edge_lengths, self.edge_lengths])
        self._adj_eid = np.concatenate([eid, eid])

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges_u)


@dataclass
class CollisionMap:
    """Per-voxel lists of roadmap nodes/edges the robot would occupy there."""

    grid: GridSpec
    node_indptr: np.ndarray  # (V + 1,) into node_ids
    node_ids: np.ndarray  # concatenated, sorted per voxel
    edge_indptr: np.ndarray
    edge_ids: np.ndarray

    def nodes_in_collision(self, flat_id: int) -> np.ndarray:
        return self.node_ids[self.node_indptr[flat_id] : self.node_indptr[flat_id + 1]]

    def edges_in_collision(self, flat_id: int) -> np.ndarray:
        return self.edge_ids[self.edge_indptr[flat_id] : self.edge_indptr[flat_id + 1]]


def segment_samples(qa: np.ndarray, qb: np.ndarray, step: float) -> np.ndarray:
    """Waypoint-inclusive samples along a straight segment, spacing <= step."""
    length = float(np.linalg.norm(qb - qa))
    n = max(1, int(math.ceil(length / step)))
    t = np.linspace(0.0, 1.0, n + 1)
    return qa[None, :] + t[:, None] * (qb - qa)[None, :]


def _batched_segments(nodes: np.ndarray, us: np.ndarray, vs: np.ndarray, step: float):
    """Sample many segments at once.

    Returns (configs, owner) where owner[i] is the segment index each sample
    belongs to.
    """
    qa = nodes[us]
    qb = nodes[vs]
    lengths = np.linalg.norm(qb - qa, axis=1)
    counts = np.maximum(1, np.ceil(lengths / step).astype(int)) + 1
    owner = np.repeat(np.arange(len(us)), counts)
    # fractional position of each sample within its own segment
    idx_in_seg = np.arange(len(owner)) - np.repeat(
        np.concatenate([[0], np.cumsum(counts)[:-1]]), counts
    )
    denom = np.repeat(counts - 1, counts).astype(float)
    denom[denom == 0] = 1.0
    t = idx_in_seg / denom
    configs = qa[owner] + t[:, None] * (qb[owner] - qa[owner])
    return configs, owner


def build_roadmap(
    model: RobotModel,
    n_nodes: int,
    k_neighbors: int,
    seed: int,
    edge_step: float = 0.05,
) -> Roadmap:
    """Sample a self-collision-free roadmap, deterministic per seed.

    Nodes are uniform in the joint-limit box, rejection-sampled against
    self-collision; each node connects to at most k nearest neighbors whose
    straight segment is self-collision-free at <= edge_step spacing.
    """
    if n_nodes < 2:
        raise ConfigError("n_nodes must be >= 2")
    if k_neighbors < 1:
        raise ConfigError("k_neighbors must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = model.lower_limits(), model.upper_limits()

    accepted: list[np.ndarray] = []
    attempts = 0
    n_accepted = 0
    while n_accepted < n_nodes:
        batch = max(256, n_nodes - n_accepted)
        samples = rng.uniform(lo, hi, size=(batch, model.dof))
        ok = ~self_collision_batch(model, samples)
        attempts += batch
        good = samples[ok]
        if len(good):
            accepted.append(good[: n_nodes - n_accepted])
            n_accepted += len(accepted[-1])
        if attempts >= max(10_000, 100 * n_nodes) and n_accepted < 0.01 * attempts:
            raise SamplingExhausted(
                f"accepted {n_accepted}/{attempts} samples; model looks degenerate"
            )
    nodes = np.unique(np.concatenate(accepted, axis=0), axis=0)

    # candidate edges: k nearest neighbors, canonicalized u < v
    if len(nodes) >= 2:
        tree = cKDTree(nodes)
        k = min(k_neighbors + 1, len(nodes))
        _, nbrs = tree.query(nodes, k=k)
        nbrs = np.atleast_2d(nbrs)
        src = np.repeat(np.arange(len(nodes)), nbrs.shape[1])
        dst = nbrs.ravel()
        keep = src != dst
        pairs = np.stack([src[keep], dst[keep]], axis=1)
        pairs.sort(axis=1)
        pairs = np.unique(pairs, axis=0)
        # near-coincident samples produce zero-length edges; drop them
        seg = np.linalg.norm(nodes[pairs[:, 0]] - nodes[pairs[:, 1]], axis=1)
        pairs = pairs[seg > 1e-12]
    else:
        pairs = np.zeros((0, 2), dtype=int)

    # reject edges whose discretized segment self-collides
    good_edges = []
    chunk = 5000
    for s in range(0, len(pairs), chunk):
        part = pairs[s : s + chunk]
        configs, owner = _batched_segments(nodes, part[:, 0], part[:, 1], edge_step)
        bad = np.zeros(len(part), dtype=bool)
        sub = 200_000
        for c0 in range(0, len(configs), sub):
            hit = self_collision_batch(model, configs[c0 : c0 + sub])
            np.logical_or.at(bad, owner[c0 : c0 + sub][hit], True)
        good_edges.append(part[~bad])
    edges = (
        np.concatenate(good_edges, axis=0) if good_edges else np.zeros((0, 2), dtype=int)
    )

    lengths = np.linalg.norm(nodes[edges[:, 0]] - nodes[edges[:, 1]], axis=1)
    tool_poses = link_transforms_batch(model, nodes)[-1] @ model.tool[None]
    return Roadmap(
        nodes=nodes,
        edges_u=edges[:, 0].astype(np.int64),
        edges_v=edges[:, 1].astype(np.int64),
        edge_lengths=lengths,
        node_tool_poses=tool_poses,
        model=model,
    )


def _voxelize_entities(
    model: RobotModel,
    configs: np.ndarray,
    owner: np.ndarray,
    n_entities: int,
    grid: GridSpec,
    chunk: int = 20_000,
) -> np.ndarray:
    """Unique packed (voxel_flat * n_entities + entity) keys for a config batch.

    Same conservative predicate as robot_voxels: a voxel hits a sphere iff
    its center lies within radius + half voxel diagonal. The candidate
    pattern around each sphere's containing voxel is separable per axis,
    so squared distances accumulate axis by axis without materializing
    (m, K, 3) float intermediates.
    """
    res = grid.resolution
    origin = np.asarray(grid.origin)
    dims = np.asarray(grid.dims, dtype=np.int64)
    nx, ny, _ = grid.dims
    keys: list[np.ndarray] = []
    # candidate voxel offsets per radius, pruned by a center-distance lower bound
    offset_cache: dict[float, np.ndarray] = {}

    def offsets_for(bound: float) -> np.ndarray:
        if bound not in offset_cache:
            k = int(math.ceil(bound / res + 0.5))
            rng = np.arange(-k, k + 1)
            ox, oy, oz = np.meshgrid(rng, rng, rng, indexing="ij")
            offs = np.stack([ox.ravel(), oy.ravel(), oz.ravel()], axis=1)
            # a sphere center sits anywhere inside its voxel, so the nearest
            # it can be to offset cell d is res * |max(0, |d| - 1/2)|
            lower = res * np.linalg.norm(np.maximum(0.0, np.abs(offs) - 0.5), axis=1)
            offset_cache[bound] = offs[lower <= bound]
        return offset_cache[bound]

    # group spheres by radius so each pattern runs once per chunk
    radius_groups: dict[float, np.ndarray] = {}
    for si, r in enumerate(model.sphere_radius):
        radius_groups.setdefault(float(r), []).append(si)
    radius_groups = {r: np.asarray(v) for r, v in radius_groups.items()}

    for c0 in range(0, len(configs), chunk):
        part = configs[c0 : c0 + chunk]
        ent = owner[c0 : c0 + chunk]
        centers = sphere_centers_batch(model, part)  # (m, S, 3)
        chunk_keys = []
        for r, group in radius_groups.items():
            c = centers[:, group, :].reshape(-1, 3)  # (m * G, 3)
            ent_rep = np.repeat(ent, len(group)) if len(group) > 1 else ent
            bound = r + HALF_DIAG * res
            offs = offsets_for(bound)  # (K, 3) int
            base = np.floor((c - origin) / res).astype(np.int64)  # (n, 3)
            # residual of each sphere center within its containing voxel
            resid = origin + (base + 0.5) * res - c  # (n, 3)
            d2 = np.zeros((len(c), len(offs)))
            cand = np.empty((len(c), len(offs), 3), dtype=np.int64)
            inb = np.ones((len(c), len(offs)), dtype=bool)
            for a in range(3):
                term = resid[:, a : a + 1] + offs[None, :, a] * res
                d2 += term * term
                idx_a = base[:, a : a + 1] + offs[None, :, a]
                cand[:, :, a] = idx_a
                inb &= (idx_a >= 0) & (idx_a < dims[a])
            hit = (d2 <= bound * bound) & inb
            rows, _ = np.nonzero(hit)
            flat = (cand[:, :, 0] + nx * (cand[:, :, 1] + ny * cand[:, :, 2]))[hit]
            chunk_keys.append(flat * n_entities + ent_rep[rows])
        if chunk_keys:
            keys.append(np.unique(np.concatenate(chunk_keys)))
    if not keys:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(keys))


def _keys_to_csr(keys: np.ndarray, n_entities: int, n_voxels: int):
    voxel = keys // n_entities
    ids = (keys % n_entities).astype(np.int64)
    counts = np.bincount(voxel, minlength=n_voxels)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return indptr, ids


def build_collision_map(
    roadmap: Roadmap,
    model: RobotModel,
    grid: GridSpec,
    edge_step: float = 0.05,
) -> CollisionMap:
    """Index every voxel by the nodes and swept edges that would occupy it."""
    if edge_step <= 0:
        raise ConfigError("edge_step must be > 0")
    n = max(1, roadmap.n_nodes)
    node_keys = _voxelize_entities(
        model, roadmap.nodes, np.arange(roadmap.n_nodes), n, grid
    )
    node_indptr, node_ids = _keys_to_csr(node_keys, n, grid.n_voxels)

    if roadmap.n_edges:
        configs, owner = _batched_segments(
            roadmap.nodes, roadmap.edges_u, roadmap.edges_v, edge_step
        )
        e = roadmap.n_edges
        edge_keys = _voxelize_entities(model, configs, owner, e, grid)
        edge_indptr, edge_ids = _keys_to_csr(edge_keys, e, grid.n_voxels)
    else:
        edge_indptr = np.zeros(grid.n_voxels + 1, dtype=np.int64)
        edge_ids = np.zeros(0, dtype=np.int64)

    return CollisionMap(
        grid=grid,
        node_indptr=node_indptr,
        node_ids=node_ids,
        edge_indptr=edge_indptr,
        edge_ids=edge_ids,
    )


# ---------------------------------------------------------------------------
# Persistence: versioned little-endian binary layout (see README)


def _write_array(fh, arr: np.ndarray, dtype: str) -> None:
    fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def save_roadmap(roadmap: Roadmap, cmap: CollisionMap, path) -> None:
    """Write roadmap + collision map.

    Layout: magic, version u32, dof u32, n_nodes u64, n_edges u64,
    grid origin 3xf64, resolution f64, dims 3xu32, then arrays in order:
    nodes f64, tool poses f64, edges u32+u32+f64, node CSR (u64 indptr,
    delta-encoded u32 ids per voxel), edge CSR likewise.
    """
    dof = roadmap.nodes.shape[1]
    with open(path, "wb") as fh:
        fh.write(ROADMAP_MAGIC)
        header = np.array([ROADMAP_VERSION, dof], dtype="<u4")
        fh.write(header.tobytes())
        fh.write(np.array([roadmap.n_nodes, roadmap.n_edges], dtype="<u8").tobytes())
        fh.write(np.asarray(cmap.grid.origin, dtype="<f8").tobytes())
        fh.write(np.array([cmap.grid.resolution], dtype="<f8").tobytes())
        fh.write(np.asarray(cmap.grid.dims, dtype="<u4").tobytes())
        _write_array(fh, roadmap.nodes, "<f8")
        _write_array(fh, roadmap.node_tool_poses, "<f8")
        _write_array(fh, roadmap.edges_u, "<u4")
        _write_array(fh, roadmap.edges_v, "<u4")
        _write_array(fh, roadmap.edge_lengths, "<f8")
        for indptr, ids in (
            (cmap.node_indptr, cmap.node_ids),
            (cmap.edge_indptr, cmap.edge_ids),
        ):
            _write_array(fh, indptr, "<u8")
            _write_array(fh, _delta_encode(indptr, ids), "<u4")


def _delta_encode(indptr: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """First id of each voxel run absolute, later ids stored as diffs."""
    if len(ids) == 0:
        return np.zeros(0, dtype=np.int64)
    out = np.diff(ids, prepend=0).astype(np.int64)
    starts = indptr[:-1][np.diff(indptr) > 0]
    out[starts] = ids[starts]
    return out


def _decode_ids(indptr: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Invert _delta_encode: per-run cumulative sums."""
    deltas = deltas.astype(np.int64)
    if len(deltas) == 0:
        return deltas
    cum = np.cumsum(deltas)
    lengths = np.diff(indptr)
    starts = indptr[:-1][lengths > 0]
    # each run inherits the cumsum carried in from earlier runs; remove it
    carried = cum[starts] - deltas[starts]
    return cum - np.repeat(carried, lengths[lengths > 0])


def load_roadmap(path, model: RobotModel) -> tuple[Roadmap, CollisionMap]:
    """Read a roadmap file; validates magic, version, and the model's DoF."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ROADMAP_MAGIC:
            raise ConfigError(f"not a roadmap file (magic {magic!r})")
        version, dof = np.frombuffer(fh.read(8), dtype="<u4")
        if version != ROADMAP_VERSION:
            raise ConfigError(f"roadmap version {version} != {ROADMAP_VERSION}")
        if dof != model.dof:
            raise ConfigError(f"roadmap dof {dof} != model dof {model.dof}")
        n_nodes, n_edges = np.frombuffer(fh.read(16), dtype="<u8")
        origin = tuple(np.frombuffer(fh.read(24), dtype="<f8"))
        resolution = float(np.frombuffer(fh.read(8), dtype="<f8")[0])
        dims = tuple(int(d) for d in np.frombuffer(fh.read(12), dtype="<u4"))
        grid = GridSpec(origin=origin, resolution=resolution, dims=dims)

        def read(count, dtype):
            return np.frombuffer(fh.read(count * np.dtype(dtype).itemsize), dtype=dtype)

        nodes = read(n_nodes * dof, "<f8").reshape(n_nodes, dof).copy()
        tool = read(n_nodes * 16, "<f8").reshape(n_nodes, 4, 4).copy()
        eu = read(n_edges, "<u4").astype(np.int64)
        ev = read(n_edges, "<u4").astype(np.int64)
        elen = read(n_edges, "<f8").copy()
        v = grid.n_voxels
        node_indptr = read(v + 1, "<u8").astype(np.int64)
        node_ids = _decode_ids(node_indptr, read(node_indptr[-1], "<u4"))
        edge_indptr = read(v + 1, "<u8").astype(np.int64)
        edge_ids = _decode_ids(edge_indptr, read(edge_indptr[-1], "<u4"))

    roadmap = Roadmap(
        nodes=nodes,
        edges_u=eu,
        edges_v=ev,
        edge_lengths=elen,
        node_tool_poses=tool,
        model=model,
    )
    cmap = CollisionMap(
        grid=grid,
        node_indptr=node_indptr,
        node_ids=node_ids,
        edge_indptr=edge_indptr,
        edge_ids=edge_ids,
    )
    return roadmap, cmap
