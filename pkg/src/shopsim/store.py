"""Store model: shelves, item catalog, shopping lists, and geometry rasterizers.

The store file carries ground-truth item poses directly; see README for the
JSON schema. Units are meters, kilograms, and radians.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientCatalog
from .voxels import VoxelMap, voxel_insert_points

MAX_LIST_MASS_KG = 4.5
LIST_SIZE = 20


@dataclass
class ShelfBox:
    """Axis-aligned box in its own frame, posed in the store by center + yaw."""

    center: np.ndarray  # (3,)
    extents: np.ndarray  # (3,) full side lengths
    yaw: float = 0.0

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float) - self.center
        c, s = math.cos(-self.yaw), math.sin(-self.yaw)
        local = np.array([c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]])
        return bool(np.all(np.abs(local) <= self.extents / 2 + 1e-9))


@dataclass
class ItemRecord:
    id: str
    dimensions: np.ndarray  # (3,) extents: depth (along outward), width, height
    mass: float
    pose: np.ndarray  # (4,) x, y, z, yaw; z is the item's base height
    outward_axis: np.ndarray  # (2,) unit vector toward the aisle
    attributes: dict = field(default_factory=dict)
    in_stock: int = 1
    handle_anchor: np.ndarray | None = None  # item-frame offset from base center

    BOOL_ATTRS = (
        "has_handle",
        "has_cap",
        "deformable",
        "hangs_on_hook",
        "in_box",
        "rigid_packaging",
    )

    def __post_init__(self):
        self.dimensions = np.asarray(self.dimensions, dtype=float)
        self.pose = np.asarray(self.pose, dtype=float)
        self.outward_axis = np.asarray(self.outward_axis, dtype=float)
        n = np.linalg.norm(self.outward_axis)
        if abs(n - 1.0) > 1e-9:
            raise ConfigError(f"item {self.id}: outward_axis must be unit, |v|={n}")
        for key in self.BOOL_ATTRS:
            self.attributes.setdefault(key, False)
        if self.handle_anchor is not None:
            self.handle_anchor = np.asarray(self.handle_anchor, dtype=float)

    @property
    def xy(self) -> np.ndarray:
        return self.pose[:2]

    def flag(self, name: str) -> bool:
        return bool(self.attributes.get(name, False))


@dataclass
class StoreModel:
    shelves: list[ShelfBox]
    items: list[ItemRecord]
    start_pose: np.ndarray  # (3,) x, y, yaw
    resolution: float = 0.05
    # offline grasp/extraction classification, id -> (grasp, extraction) names;
    # populated by shopsim.grasping.classify_catalog and carried in the file
    classification: dict[str, tuple[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        self.start_pose = np.asarray(self.start_pose, dtype=float)
        ids = [it.id for it in self.items]
        if len(ids) != len(set(ids)):
            raise ConfigError("item ids must be unique")

    def item(self, item_id: str) -> ItemRecord:
        for it in self.items:
            if it.id == item_id:
                return it
        raise ConfigError(f"unknown item id {item_id!r}")


@dataclass
class ShoppingList:
    """Ordered (item id, requested instances) entries; instances in {1, 2}."""

    entries: list[tuple[str, int]]

    @property
    def total_instances(self) -> int:
        return sum(n for _, n in self.entries)


def eligible_items(store: StoreModel) -> list[ItemRecord]:
    """Items light enough to pick and currently in stock."""
    return [it for it in store.items if it.mass <= MAX_LIST_MASS_KG and it.in_stock >= 1]


def generate_shopping_list(store: StoreModel, seed: int) -> ShoppingList:
    """Draw 20 unique eligible items, each requested once or twice.

    Identical seeds yield identical lists.
    """
    pool = sorted(eligible_items(store), key=lambda it: it.id)
    if len(pool) < LIST_SIZE:
        raise InsufficientCatalog(
            f"need >= {LIST_SIZE} eligible in-stock items, have {len(pool)}"
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=LIST_SIZE, replace=False)
    counts = rng.integers(1, 3, size=LIST_SIZE)
    return ShoppingList(entries=[(pool[i].id, int(n)) for i, n in zip(picks, counts)])


# ---------------------------------------------------------------------------
# JSON schema


def store_to_dict(store: StoreModel) -> dict:
    return {
        "resolution": store.resolution,
        "shelves": [
            {
                "center": s.center.tolist(),
                "extents": s.extents.tolist(),
                "yaw": s.yaw,
            }
            for s in store.shelves
        ],
        "items": [
            {
                "id": it.id,
                "dims": it.dimensions.tolist(),
                "mass": it.mass,
                "pose": it.pose.tolist(),
                "outward_axis": it.outward_axis.tolist(),
                "attributes": {k: bool(v) for k, v in sorted(it.attributes.items())},
                "in_stock": it.in_stock,
                **(
                    {"handle_anchor": it.handle_anchor.tolist()}
                    if it.handle_anchor is not None
                    else {}
                ),
            }
            for it in store.items
        ],
        "start_pose": store.start_pose.tolist(),
        **(
            {"classification": {k: list(v) for k, v in sorted(store.classification.items())}}
            if store.classification
            else {}
        ),
    }


def store_from_dict(data: dict) -> StoreModel:
    try:
        shelves = [
            ShelfBox(
                center=np.asarray(s["center"], dtype=float),
                extents=np.asarray(s["extents"], dtype=float),
                yaw=float(s.get("yaw", 0.0)),
            )
            for s in data["shelves"]
        ]
        items = [
            ItemRecord(
                id=str(d["id"]),
                dimensions=d["dims"],
                mass=float(d["mass"]),
                pose=d["pose"],
                outward_axis=d["outward_axis"],
                attributes=dict(d.get("attributes", {})),
                in_stock=int(d.get("in_stock", 1)),
                handle_anchor=d.get("handle_anchor"),
            )
            for d in data["items"]
        ]
        store = StoreModel(
            shelves=shelves,
            items=items,
            start_pose=np.asarray(data["start_pose"], dtype=float),
            resolution=float(data.get("resolution", 0.05)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed store file: {exc}") from exc
    return store


def save_store(store: StoreModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(store_to_dict(store), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_store(path) -> StoreModel:
    with open(path) as fh:
        return store_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Geometry rasterizers


def _box_axis_samples(extent: float, resolution: float) -> np.ndarray:
    """Interior sample coordinates along one box axis, spaced <= resolution."""
    half = extent / 2
    pts = np.arange(-half + resolution / 2, half, resolution)
    if len(pts) == 0:
        pts = np.array([0.0])
    return pts


def _box_voxel_points(center, extents, yaw, resolution, top_only=False) -> np.ndarray:
    """Sample points filling an oriented box (or just its top layer)."""
    ext = np.asarray(extents, dtype=float)
    axes = [_box_axis_samples(e, resolution) for e in ext]
    if top_only:
        axes[2] = np.array([ext[2] / 2 - resolution / 2])
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return pts @ rot.T + np.asarray(center, dtype=float)


def rasterize_store(store: StoreModel, resolution: float | None = None, solid: bool = True) -> VoxelMap:
    """Voxelize all shelf boxes into a fresh map.

    solid=False samples only each shelf's top layer, which is all the 2.5D
    elevation pipeline needs and is far cheaper for large stores.
    """
    res = store.resolution if resolution is None else resolution
    vmap = VoxelMap(resolution=res, origin=np.zeros(3))
    for shelf in store.shelves:
        pts = _box_voxel_points(shelf.center, shelf.extents, shelf.yaw, res, top_only=not solid)
        voxel_insert_points(vmap, pts)
    return vmap


def instance_pose(item: ItemRecord, depth: float) -> np.ndarray:
    """Pose (x, y, z, yaw) of an instance sitting `depth` behind the front one."""
    shifted = item.pose.copy()
    shifted[:2] -= depth * item.outward_axis
    return shifted
