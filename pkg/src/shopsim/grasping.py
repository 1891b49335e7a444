"""Grasp and extraction strategy selection, grasp pose computation, and the
simulated grasp outcome/verification channel.

Strategy selection is a deterministic rule table over item attributes (the
thresholds live in this module and are total over any valid catalog). Item
frames: origin at the base-center of the item box, x along the outward
axis, z up; dims = (depth, width, height).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoInstance, PlanInfeasible, SignalError
from .store import ItemRecord, StoreModel

HEAVY_DEFORMABLE_MASS_KG = 1.5
JUG_EXTRACTION_MASS_KG = 2.0
SUCTION_FACE_MIN_M = 0.03
FINGER_CLOSED_GAP_M = 0.005
SEAL_PRESSURE_MAX = 0.5  # normalized suction pressure; lower is a better seal
GRAVITY = 9.81


class GraspType(enum.Enum):
    FLAT_CYLINDRICAL_PINCH = "flat_cylindrical_pinch"
    CAP_GRASP = "cap_grasp"
    HANDLE_GRASP = "handle_grasp"
    HEAVY_DEFORMABLE_GRASP = "heavy_deformable_grasp"
    SUCTION_GRASP = "suction_grasp"


class ExtractionType(enum.Enum):
    LIP_FREE_SHELF = "lip_free_shelf"
    JUG = "jug"
    BOX = "box"
    HOOK = "hook"


class Tool(enum.Enum):
    PARALLEL_JAW = "parallel_jaw"
    SUCTION = "suction"


TOOL_FOR_GRASP = {
    GraspType.FLAT_CYLINDRICAL_PINCH: Tool.PARALLEL_JAW,
    GraspType.CAP_GRASP: Tool.PARALLEL_JAW,
    GraspType.HANDLE_GRASP: Tool.PARALLEL_JAW,
    GraspType.HEAVY_DEFORMABLE_GRASP: Tool.SUCTION,
    GraspType.SUCTION_GRASP: Tool.SUCTION,
}


@dataclass
class GraspPlan:
    grasp_type: GraspType
    extraction_type: ExtractionType
    tool: Tool
    tool_pose: np.ndarray  # (4, 4) in the store frame
    approach_axis: np.ndarray  # (2,) unit, item outward axis


@dataclass
class GraspSignals:
    tip_wrench: float  # N, downward force at the tip
    finger_gap: float | None = None  # m, parallel jaw only
    pressure: float | None = None  # normalized, suction only


@dataclass
class InstanceDetection:
    position: np.ndarray  # (3,) item frame; x = depth behind the shelf front
    visibility: float = 1.0
    occluded: bool = False


def classify_grasp(item: ItemRecord) -> GraspType:
    """Map an item to exactly one grasp category (rule precedence in order)."""
    if item.flag("has_handle"):
        return GraspType.HANDLE_GRASP
    if item.flag("deformable") and item.mass > HEAVY_DEFORMABLE_MASS_KG:
        return GraspType.HEAVY_DEFORMABLE_GRASP
    if item.flag("has_cap"):
        return GraspType.CAP_GRASP
    _, width, height = item.dimensions
    if min(width, height) >= SUCTION_FACE_MIN_M:
        return GraspType.SUCTION_GRASP
    return GraspType.FLAT_CYLINDRICAL_PINCH


def classify_extraction(item: ItemRecord) -> ExtractionType:
    if item.flag("hangs_on_hook"):
        return ExtractionType.HOOK
    if item.flag("in_box"):
        return ExtractionType.BOX
    if item.flag("has_handle") and item.mass > JUG_EXTRACTION_MASS_KG:
        return ExtractionType.JUG
    return ExtractionType.LIP_FREE_SHELF


def classify_catalog(store: StoreModel) -> dict[str, tuple[GraspType, ExtractionType]]:
    """Offline classification cache for every catalog item."""
    return {it.id: (classify_grasp(it), classify_extraction(it)) for it in store.items}


def select_instance(detections: list[InstanceDetection]) -> int:
    """Pick the unoccluded instance nearest the shelf front.

    Ties break leftmost (smallest y), then lowest index. Raises NoInstance
    for an empty list or when every instance is occluded.
    """
    if not detections:
        raise NoInstance("no instances detected")
    best = None
    for i, det in enumerate(detections):
        if det.occluded:
            continue
        p = np.asarray(det.position, dtype=float)
        key = (round(float(p[0]), 9), round(float(p[1]), 9), i)
        if best is None or key < best[0]:
            best = (key, i)
    if best is None:
        raise NoInstance("every detected instance is occluded")
    return best[1]


def _item_frame(item: ItemRecord, pose=None) -> tuple[np.ndarray, np.ndarray]:
    """(rotation, translation) of the item frame in the store frame."""
    pose = item.pose if pose is None else np.asarray(pose, dtype=float)
    ox, oy = item.outward_axis
    R = np.array([[ox, -oy, 0.0], [oy, ox, 0.0], [0.0, 0.0, 1.0]])
    t = np.array([pose[0], pose[1], pose[2]])
    return R, t


def grasp_pose(item: ItemRecord, grasp_type: GraspType, pose=None) -> np.ndarray:
    """Tool pose in the store frame for the given strategy.

    suction: center of the exposed (outward) lateral face
    pinch:   item center at mid-height, fingers across the smaller extent
    cap:     top center, tool z at the item height
    handle:  the item's handle anchor (default: outward face, 3/4 height)

    The tool x-axis points along the approach direction (into the shelf).
    """
    depth, _, height = item.dimensions
    if grasp_type is GraspType.SUCTION_GRASP:
        local = np.array([depth / 2, 0.0, height / 2])
    elif grasp_type is GraspType.CAP_GRASP:
        local = np.array([0.0, 0.0, height])
    elif grasp_type is GraspType.HANDLE_GRASP:
        if not item.flag("has_handle"):
            raise PlanInfeasible(f"item {item.id} has no handle to grasp")
        local = (
            item.handle_anchor
            if item.handle_anchor is not None
            else np.array([depth / 2, 0.0, 0.75 * height])
        )
    else:  # pinch and heavy-deformable both engage the body of the item
        local = np.array([0.0, 0.0, height / 2])

    R_item, t_item = _item_frame(item, pose)
    position = R_item @ local + t_item
    ox, oy = item.outward_axis
    # tool x points into the shelf (opposite the outward axis), z stays up
    R_tool = np.array([[-ox, oy, 0.0], [-oy, -ox, 0.0], [0.0, 0.0, 1.0]])
    T = np.eye(4)
    T[:3, :3] = R_tool
    T[:3, 3] = position
    return T


def plan_grasp(item: ItemRecord, pose=None) -> GraspPlan:
    """Classify the item and compute its tool pose in one shot."""
    g = classify_grasp(item)
    e = classify_extraction(item)
    return GraspPlan(
        grasp_type=g,
        extraction_type=e,
        tool=TOOL_FOR_GRASP[g],
        tool_pose=grasp_pose(item, g, pose),
        approach_axis=item.outward_axis.copy(),
    )


def simulate_grasp_outcome(
    plan: GraspPlan,
    item: ItemRecord,
    rng: np.random.Generator,
    success_prob: float = 0.8,
) -> tuple[bool, GraspSignals]:
    """Bernoulli grasp execution with tool signals consistent with the result.

    Success: the tool holds the item (finger gap near the grasped extent or
    a sealed suction cup) and the tip wrench carries the item's weight.
    Failure: signals consistent with an empty tool.
    """
    success = bool(rng.random() < success_prob)
    weight = item.mass * GRAVITY
    jitter = 1.0 + 0.02 * float(rng.standard_normal())
    if plan.tool is Tool.PARALLEL_JAW:
        grasped_extent = float(min(item.dimensions[0], item.dimensions[1]))
        if success:
            signals = GraspSignals(
                tip_wrench=weight * jitter,
                finger_gap=max(FINGER_CLOSED_GAP_M * 2, grasped_extent * jitter),
            )
        else:
            signals = GraspSignals(tip_wrench=abs(0.02 * weight * jitter), finger_gap=0.0)
    else:
        if success:
            signals = GraspSignals(
                tip_wrench=weight * jitter, pressure=0.2 * abs(jitter)
            )
        else:
            signals = GraspSignals(
                tip_wrench=abs(0.02 * weight * jitter), pressure=min(1.0, 0.9 * abs(jitter))
            )
    return success, signals


def verify_grasp(signals: GraspSignals, tool: Tool, expected_weight: float) -> bool:
    """Decide from tip wrench plus finger position or suction pressure.

    Parallel jaw: fingers not fully closed AND wrench at least half the
    expected item weight. Suction: sealed pressure AND the wrench condition.
    """
    wrench_ok = abs(signals.tip_wrench) >= 0.5 * expected_weight
    if tool is Tool.PARALLEL_JAW:
        if signals.finger_gap is None:
            raise SignalError("parallel jaw verification needs finger_gap")
        return signals.finger_gap > FINGER_CLOSED_GAP_M and wrench_ok
    if signals.pressure is None:
        raise SignalError("suction verification needs pressure")
    return signals.pressure <= SEAL_PRESSURE_MAX and wrench_ok
