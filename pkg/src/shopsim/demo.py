"""Factories for desk-scale demo assets: a shelf-aisle store with a mixed
catalog, a 4-DoF shelf-picking arm, and a planar 2-link benchmark arm.

These are the assets the narrative demos, tests, and campaign configs are
built from; everything is deterministic per seed.
"""

from __future__ import annotations

import math

import numpy as np

from .kinematics import Joint, RobotModel
from .store import ItemRecord, ShelfBox, StoreModel
from .transforms import transform, translation

AISLE_PITCH = 4.4  # y distance between aisle centerlines
SHELF_OFFSET = 1.1  # shelf centerline distance from the aisle centerline
SHELF_LENGTH = 6.0
SHELF_DEPTH = 0.5
SHELF_HEIGHT = 1.2
ITEM_SPACING = 0.5
ITEM_LEVEL_Z = 0.55


def _revolute(axis, origin_xyz, limits) -> Joint:
    return Joint(
        kind="revolute",
        origin=translation(*origin_xyz),
        axis=np.asarray(axis, dtype=float),
        limits=np.asarray([limits], dtype=float),
    )


def shelf_arm() -> RobotModel:
    """4-DoF arm (yaw, shoulder, elbow, wrist) mounted 0.45 m up the base."""
    joints = [
        _revolute((0, 0, 1), (0.0, 0.0, 0.45), (-3.1, 3.1)),
        _revolute((0, 1, 0), (0.05, 0.0, 0.0), (-2.2, 2.2)),
        _revolute((0, 1, 0), (0.30, 0.0, 0.0), (-2.4, 2.4)),
        _revolute((0, 1, 0), (0.30, 0.0, 0.0), (-2.0, 2.0)),
    ]
    spheres = [
        [(np.array([0.0, 0.0, 0.0]), 0.07)],
        [(np.array([0.10, 0.0, 0.0]), 0.055), (np.array([0.22, 0.0, 0.0]), 0.055)],
        [(np.array([0.08, 0.0, 0.0]), 0.05), (np.array([0.20, 0.0, 0.0]), 0.05)],
        [(np.array([0.05, 0.0, 0.0]), 0.045), (np.array([0.11, 0.0, 0.0]), 0.045)],
    ]
    base = [(np.array([0.0, 0.0, 0.25]), 0.10)]  # support column under the mount
    return RobotModel(
        joints=joints,
        spheres=spheres,
        tool=translation(0.15, 0.0, 0.0),
        base_spheres=base,
        name="shelf-arm",
    )


SHELF_ARM_HOME = [2.8, -1.2, 2.2, -1.0]  # folded away from the shelf side


def shelf_arm_grid(resolution: float = 0.05):
    """Collision-map grid covering the shelf arm's reachable volume."""
    from .roadmap import GridSpec

    n_xy = int(round(2.5 / resolution))
    n_z = int(round(1.8 / resolution))
    return GridSpec(origin=(-1.25, -1.25, -0.15), resolution=resolution, dims=(n_xy, n_xy, n_z))


def planar_arm(
    link_lengths=(0.5, 0.5),
    sphere_radius: float = 0.06,
    base_sphere: bool = True,
    limits=(-math.pi, math.pi),
) -> RobotModel:
    """Planar 2-link arm rotating about z; the benchmark model."""
    l1, l2 = link_lengths
    joints = [
        _revolute((0, 0, 1), (0.0, 0.0, 0.0), limits),
        _revolute((0, 0, 1), (l1, 0.0, 0.0), limits),
    ]
    spheres = [
        [(np.array([x, 0.0, 0.0]), sphere_radius) for x in np.linspace(l1 / 4, l1, 4)],
        [(np.array([x, 0.0, 0.0]), sphere_radius) for x in np.linspace(l2 / 4, l2, 4)],
    ]
    base = [(np.array([0.0, 0.0, 0.0]), 0.08)] if base_sphere else []
    return RobotModel(
        joints=joints,
        spheres=spheres,
        tool=translation(l2, 0.0, 0.0),
        base_spheres=base,
        name="planar-2r",
    )


# catalog archetypes cycled over the item slots: (mass, dims, attributes);
# heights stay >= ~0.15 m so grasp targets clear the shelf-surface voxels
_ARCHETYPES = [
    ("can", 0.4, (0.07, 0.07, 0.16), {}),
    ("cereal_box", 0.5, (0.07, 0.2, 0.28), {"in_box": False, "rigid_packaging": True}),
    ("milk_jug", 2.6, (0.15, 0.15, 0.25), {"has_handle": True, "rigid_packaging": True}),
    ("bottle", 0.9, (0.08, 0.08, 0.24), {"has_cap": True, "rigid_packaging": True}),
    ("rice_bag", 1.8, (0.1, 0.18, 0.26), {"deformable": True}),
    ("snack_hook", 0.15, (0.04, 0.12, 0.18), {"hangs_on_hook": True, "deformable": True}),
    ("tea_carton", 0.25, (0.06, 0.14, 0.16), {"in_box": True, "rigid_packaging": True}),
    ("spice_tube", 0.1, (0.025, 0.025, 0.16), {"rigid_packaging": True}),
    ("detergent", 3.1, (0.12, 0.2, 0.3), {"has_handle": True, "rigid_packaging": True}),
    ("soft_pack", 0.6, (0.09, 0.16, 0.2), {"deformable": True}),
]


def demo_store(
    n_items: int = 48, seed: int = 0, heavy_outliers: int = 2, min_stock: int = 1
) -> StoreModel:
    """Aisle-grid store with a deterministic mixed catalog.

    Shelves run along x in paired rows around each aisle centerline; items
    sit one level up at the shelf front, facing the aisle. A few catalog
    entries exceed the pickable mass so list-eligibility filtering has work
    to do.
    """
    rng = np.random.default_rng(seed)
    per_row = int(SHELF_LENGTH // ITEM_SPACING) - 1
    per_aisle = 2 * per_row
    n_aisles = max(1, math.ceil(n_items / per_aisle))

    shelves = []
    slots = []  # (x, y, outward)
    for a in range(n_aisles):
        cy = a * AISLE_PITCH
        for side in (+1, -1):
            y_shelf = cy + side * SHELF_OFFSET
            shelves.append(
                ShelfBox(
                    center=np.array([0.0, y_shelf, SHELF_HEIGHT / 2]),
                    extents=np.array([SHELF_LENGTH, SHELF_DEPTH, SHELF_HEIGHT]),
                    yaw=0.0,
                )
            )
            outward = np.array([0.0, -float(side)])
            y_front = y_shelf - side * SHELF_DEPTH / 2
            for k in range(per_row):
                x = -SHELF_LENGTH / 2 + ITEM_SPACING * (k + 1)
                slots.append((x, y_front, outward))

    if n_items > len(slots):
        raise ValueError(f"store layout holds at most {len(slots)} items")

    items = []
    for i in range(n_items):
        x, y_front, outward = slots[i]
        name, mass, dims, attrs = _ARCHETYPES[i % len(_ARCHETYPES)]
        jitter = 1.0 + 0.1 * float(rng.uniform(-1, 1))
        mass = round(mass * jitter, 3)
        if i < heavy_outliers:
            mass = 5.0 + i  # catalog-only: too heavy for a shopping list
        dims = np.round(np.asarray(dims) * (1.0 + 0.05 * float(rng.uniform(-1, 1))), 3)
        # item center sits just inside the shelf front face
        y_item = y_front - outward[1] * (dims[0] / 2 + 0.01)
        items.append(
            ItemRecord(
                id=f"{name}_{i:03d}",
                dimensions=dims,
                mass=mass,
                pose=np.array([x, y_item, ITEM_LEVEL_Z, math.atan2(outward[1], outward[0])]),
                outward_axis=outward,
                attributes=dict(attrs),
                in_stock=max(min_stock, int(rng.integers(1, 4))),
            )
        )

    start = np.array([-SHELF_LENGTH / 2 - 1.2, 0.0, 0.0])
    return StoreModel(shelves=shelves, items=items, start_pose=start, resolution=0.05)
