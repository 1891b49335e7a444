"""Hierarchical task FSM and the shopping-run / campaign drivers.

A run walks: localize -> plan tour -> per item (navigate, relocalize,
detect, plan grasp, plan motion, execute, verify, place) -> return home.
Every state visit emits an `entered` event paired with exactly one
terminal kind, and the whole run is reproducible from (inputs, seed).
Fault channels (detection miss/misclass, motion-plan faults, joint-control
errors, collisions, E-stop) inject failures per action; unrecoverable ones
end the run with a cause from the failure taxonomy.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import grasping
from .errors import (
    ConfigError,
    FollowAbort,
    FollowTimeout,
    FsmViolation,
    GoalBlocked,
    InvalidEndpoint,
    NoPath,
    PlanInfeasible,
    StartInCollision,
    Unreachable,
)
from .follow import BaseSimulator, FollowParams, follow_path
from .kinematics import RobotModel
from .nav import BasePose, decimate_collinear, grid_plan, item_goal_pose, pairwise_costs
from .planner import PlanParams, plan_to_pose
from .roadmap import CollisionMap, Roadmap
from .store import (
    ShoppingList,
    StoreModel,
    _box_voxel_points,
    generate_shopping_list,
    instance_pose,
    rasterize_store,
)
from .tour import plan_tour, tour_cost
from .transforms import pose_xyzyaw
from .voxels import VoxelMap, derive_elevation, inflate, voxel_insert_points

RUNLOG_VERSION = 1

# run-terminal failure causes (the report taxonomy)
CAUSE_JOINT = "joint_control_errors"
CAUSE_COLLISION = "collision"
CAUSE_SOFTWARE = "software_fault"
CAUSE_ESTOP = "estop"
CAUSE_OTHER = "other"
DEFAULT_TAXONOMY = (CAUSE_JOINT, CAUSE_COLLISION, CAUSE_SOFTWARE, CAUSE_ESTOP, CAUSE_OTHER)


class TaskState(str, enum.Enum):
    START = "start"
    LOCALIZE = "localize"
    PLAN_TOUR = "plan_tour"
    NAVIGATE = "navigate"
    RELOCALIZE = "relocalize"
    DETECT = "detect"
    PLAN_GRASP = "plan_grasp"
    PLAN_MOTION = "plan_motion"
    EXECUTE_GRASP = "execute_grasp"
    VERIFY_GRASP = "verify_grasp"
    PLACE = "place"
    NEXT_ITEM = "next_item"
    RETURN_HOME = "return_home"
    DONE = "done"
    ABORTED = "aborted"


ITEM_LOOP_STATES = (
    TaskState.NAVIGATE,
    TaskState.RELOCALIZE,
    TaskState.DETECT,
    TaskState.PLAN_GRASP,
    TaskState.PLAN_MOTION,
    TaskState.EXECUTE_GRASP,
    TaskState.VERIFY_GRASP,
    TaskState.PLACE,
    TaskState.NEXT_ITEM,
)

_ACTIONS = {
    TaskState.START: (),
    TaskState.LOCALIZE: ("relocalize",),
    TaskState.PLAN_TOUR: ("item_goal_poses", "pairwise_costs", "plan_tour"),
    TaskState.NAVIGATE: ("grid_plan", "follow_path"),
    TaskState.RELOCALIZE: ("relocalize",),
    TaskState.DETECT: ("detect_instances", "select_instance"),
    TaskState.PLAN_GRASP: ("classify", "grasp_pose"),
    TaskState.PLAN_MOTION: ("prune", "plan_to_pose"),
    TaskState.EXECUTE_GRASP: ("execute_grasp",),
    TaskState.VERIFY_GRASP: ("verify_grasp",),
    TaskState.PLACE: ("place_in_basket",),
    TaskState.NEXT_ITEM: (),
    TaskState.RETURN_HOME: ("grid_plan", "follow_path"),
    TaskState.DONE: (),
    TaskState.ABORTED: (),
}

_EDGES: dict[tuple[TaskState, str], TaskState] = {
    (TaskState.START, "begin"): TaskState.LOCALIZE,
    (TaskState.LOCALIZE, "localized"): TaskState.PLAN_TOUR,
    (TaskState.PLAN_TOUR, "tour_ready"): TaskState.NAVIGATE,
    (TaskState.NAVIGATE, "arrived"): TaskState.RELOCALIZE,
    (TaskState.RELOCALIZE, "relocalized"): TaskState.DETECT,
    (TaskState.DETECT, "detected"): TaskState.PLAN_GRASP,
    (TaskState.DETECT, "detect_failed"): TaskState.DETECT,
    (TaskState.DETECT, "detect_exhausted"): TaskState.NEXT_ITEM,
    (TaskState.DETECT, "out_of_stock"): TaskState.NEXT_ITEM,
    (TaskState.PLAN_GRASP, "grasp_planned"): TaskState.PLAN_MOTION,
    (TaskState.PLAN_GRASP, "plan_infeasible"): TaskState.NEXT_ITEM,
    (TaskState.PLAN_MOTION, "motion_planned"): TaskState.EXECUTE_GRASP,
    (TaskState.PLAN_MOTION, "plan_failed"): TaskState.PLAN_MOTION,
    (TaskState.PLAN_MOTION, "plan_exhausted"): TaskState.NEXT_ITEM,
    (TaskState.EXECUTE_GRASP, "executed"): TaskState.VERIFY_GRASP,
    (TaskState.VERIFY_GRASP, "verified_true"): TaskState.PLACE,
    (TaskState.VERIFY_GRASP, "verified_false"): TaskState.DETECT,
    (TaskState.VERIFY_GRASP, "verified_false_exhausted"): TaskState.NEXT_ITEM,
    (TaskState.PLACE, "placed"): TaskState.NEXT_ITEM,
    (TaskState.PLACE, "placed_more_instances"): TaskState.DETECT,
    (TaskState.NEXT_ITEM, "more_items"): TaskState.NAVIGATE,
    (TaskState.NEXT_ITEM, "list_exhausted"): TaskState.RETURN_HOME,
    (TaskState.RETURN_HOME, "arrived_home"): TaskState.DONE,
}
# unrecoverable channels can fire in any acting state
for _s in (TaskState.LOCALIZE, TaskState.PLAN_TOUR, TaskState.RETURN_HOME) + ITEM_LOOP_STATES:
    _EDGES[(_s, "estop")] = TaskState.ABORTED
    _EDGES[(_s, "fault")] = TaskState.ABORTED


def step_fsm(state: TaskState, event: str) -> tuple[TaskState, tuple[str, ...]]:
    """Advance the FSM; returns the next state and its module-call actions.

    Raises FsmViolation for a (state, event) pair outside the edge table
    (programming error: fail fast).
    """
    key = (state, event)
    if key not in _EDGES:
        raise FsmViolation(f"no edge for event {event!r} in state {state.value!r}")
    nxt = _EDGES[key]
    return nxt, _ACTIONS[nxt]


@dataclass
class FaultConfig:
    detection_miss_rate: float = 0.0
    detection_misclass_rate: float = 0.0
    motion_plan_fault_rate: float = 0.0
    joint_control_error_rate: float = 0.0
    collision_rate: float = 0.0
    estop_rate: float = 0.0
    detect_retries: int = 2
    grasp_retries: int = 2
    motion_retries: int = 2

    def __post_init__(self):
        for name in (
            "detection_miss_rate",
            "detection_misclass_rate",
            "motion_plan_fault_rate",
            "joint_control_error_rate",
            "collision_rate",
            "estop_rate",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        for name in ("detect_retries", "grasp_retries", "motion_retries"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


@dataclass
class TaskParams:
    # action durations (seconds of simulated time)
    localize_duration_s: float = 2.0
    tour_plan_duration_s: float = 2.0
    detect_duration_s: float = 3.0
    plan_duration_s: float = 1.0
    grasp_duration_s: float = 15.0
    place_duration_s: float = 10.0
    relocalize_duration_s: float = 0.5
    # perception / grasp simulation
    grasp_success_prob: float = 0.8
    instance_gap_m: float = 0.02
    # navigation
    standoff_min: float = 0.40
    standoff_max: float = 0.85
    obstacle_height: float = 0.02
    robot_radius: float = 0.30
    nav_plan_margin: float = 0.10  # extra inflation for planning vs. collision
    nav_cell_res: float = 0.05
    follow: FollowParams = field(default_factory=FollowParams)
    reloc_sigma: float = 0.0
    # arm planning
    home_q: list[float] | None = None
    plan: PlanParams = field(
        default_factory=lambda: PlanParams(pos_tol=5e-3, rot_tol=None, neighborhood_radius=0.3)
    )
    bay_height_m: float = 0.35
    # safety rail: a run exceeding this much sim time is a software fault
    watchdog_s: float = 7200.0


@dataclass
class TaskEvent:
    sim_time: float
    state: str
    kind: str  # entered | succeeded | failed | retried | skipped | estop
    item_id: str | None = None
    cause: str | None = None
    payload: dict = field(default_factory=dict)


@dataclass
class RunLog:
    seed: int
    shopping_list: list[tuple[str, int]]
    events: list[TaskEvent] = field(default_factory=list)
    outcome: dict = field(default_factory=dict)  # {"kind": ..., "cause": ...}
    items_retrieved: list[str] = field(default_factory=list)
    total_sim_time: float = 0.0

    @property
    def completed(self) -> bool:
        return self.outcome.get("kind") == "completed"

    @property
    def requested_instances(self) -> int:
        return sum(n for _, n in self.shopping_list)


# ---------------------------------------------------------------------------
# Run log persistence (line-delimited JSON)


def save_runlog(log: RunLog, path) -> None:
    with open(path, "w") as fh:
        header = {
            "runlog_v": RUNLOG_VERSION,
            "seed": log.seed,
            "shopping_list": [[i, n] for i, n in log.shopping_list],
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ev in log.events:
            fh.write(json.dumps(asdict(ev), sort_keys=True) + "\n")
        footer = {
            "outcome": log.outcome,
            "items_retrieved": log.items_retrieved,
            "total_sim_time": log.total_sim_time,
        }
        fh.write(json.dumps(footer, sort_keys=True) + "\n")


def load_runlog(path) -> RunLog:
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if len(lines) < 2 or "runlog_v" not in lines[0] or "outcome" not in lines[-1]:
        raise ConfigError(f"malformed run log {path}")
    if lines[0]["runlog_v"] != RUNLOG_VERSION:
        raise ConfigError(f"run log version {lines[0]['runlog_v']} != {RUNLOG_VERSION}")
    return RunLog(
        seed=int(lines[0]["seed"]),
        shopping_list=[(i, int(n)) for i, n in lines[0]["shopping_list"]],
        events=[TaskEvent(**ev) for ev in lines[1:-1]],
        outcome=dict(lines[-1]["outcome"]),
        items_retrieved=list(lines[-1]["items_retrieved"]),
        total_sim_time=float(lines[-1]["total_sim_time"]),
    )


# ---------------------------------------------------------------------------
# Run driver


class _Abort(Exception):
    """Internal: unrecoverable fault unwinding the run."""

    def __init__(self, kind: str, cause: str, detail: str | None = None):
        super().__init__(detail or cause)
        self.kind = kind  # "fault" | "estop"
        self.cause = cause
        self.detail = detail


class _Runner:
    def __init__(self, store, shopping_list, robot, roadmap, cmap, faults, params, seed):
        self.store = store
        self.list = shopping_list
        self.robot = robot
        self.roadmap = roadmap
        self.cmap = cmap
        self.faults = faults
        self.params = params
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.t = 0.0
        self.events: list[TaskEvent] = []
        self.retrieved: list[str] = []
        self.stock = {it.id: it.in_stock for it in store.items}
        self.state = TaskState.START
        self.classification = grasping.classify_catalog(store)

    # -- bookkeeping helpers

    def emit(self, state: TaskState, kind: str, item=None, cause=None, **payload):
        self.events.append(
            TaskEvent(
                sim_time=round(self.t, 6),
                state=state.value,
                kind=kind,
                item_id=item,
                cause=cause,
                payload=payload,
            )
        )

    def advance(self, expected: TaskState, event: str):
        self.state, _ = step_fsm(self.state, event)
        if self.state is not expected:
            raise FsmViolation(
                f"runner expected {expected.value}, FSM chose {self.state.value}"
            )

    def spend(self, seconds: float):
        self.t += seconds
        if self.t > self.params.watchdog_s:
            raise _Abort("fault", CAUSE_SOFTWARE, "watchdog: sim time budget exceeded")

    def sample_unrecoverable(self):
        """One draw per action for the run-ending channels."""
        f = self.faults
        if self.rng.random() < f.estop_rate:
            raise _Abort("estop", CAUSE_ESTOP)
        if self.rng.random() < f.collision_rate:
            raise _Abort("fault", CAUSE_COLLISION)
        if self.rng.random() < f.joint_control_error_rate:
            raise _Abort("fault", CAUSE_JOINT)

    # -- world construction

    def _store_bounds(self):
        pts = [self.store.start_pose[:2]]
        for s in self.store.shelves:
            pts.append(s.center[:2] - s.extents[:2])
            pts.append(s.center[:2] + s.extents[:2])
        pts = np.asarray(pts)
        return (pts.min(axis=0) - 1.0, pts.max(axis=0) + 1.0)

    def build_nav_grids(self):
        """(planning grid, collision grid): planning carries extra margin so
        the follower's corner cutting stays clear of the true inflation."""
        vmap = rasterize_store(self.store, self.params.nav_cell_res, solid=False)
        elev = derive_elevation(
            vmap,
            z_min=0.0,
            z_max=3.0,
            cell_res=self.params.nav_cell_res,
            bounds=self._store_bounds(),
        )
        check = inflate(elev, self.params.obstacle_height, self.params.robot_radius)
        plan = inflate(
            elev,
            self.params.obstacle_height,
            self.params.robot_radius + self.params.nav_plan_margin,
        )
        return plan, check

    def bay_world(self, item, base_pose: BasePose) -> VoxelMap:
        """Shelf slabs around the item's bay, voxelized in the base frame."""
        res = self.cmap.grid.resolution
        world = VoxelMap(resolution=res, origin=np.asarray(self.cmap.grid.origin))
        shelf = next((s for s in self.store.shelves if s.contains(item.pose[:3])), None)
        if shelf is None:
            return world
        z0 = item.pose[2]
        bay = self.params.bay_height_m
        ox, oy = item.outward_axis
        boxes = [
            # bottom and top slabs span the shelf footprint
            (
                np.array([shelf.center[0], shelf.center[1], z0 - 0.03]),
                np.array([shelf.extents[0], shelf.extents[1], 0.06]),
                shelf.yaw,
            ),
            (
                np.array([shelf.center[0], shelf.center[1], z0 + bay + 0.03]),
                np.array([shelf.extents[0], shelf.extents[1], 0.06]),
                shelf.yaw,
            ),
            # back wall behind the item row
            (
                np.array([item.pose[0] - 0.35 * ox, item.pose[1] - 0.35 * oy, z0 + bay / 2]),
                np.array([0.06, max(shelf.extents[0], shelf.extents[1]), bay + 0.2]),
                math.atan2(oy, ox),
            ),
        ]
        c, s = math.cos(-base_pose.yaw), math.sin(-base_pose.yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        shift = np.array([base_pose.x, base_pose.y, 0.0])
        for center, extents, yaw in boxes:
            pts = _box_voxel_points(center, extents, yaw, res)
            voxel_insert_points(world, (pts - shift) @ rot.T)
        return world

    # -- top-level run

    def run(self) -> RunLog:
        known = {it.id for it in self.store.items}
        for item_id, n in self.list.entries:
            if item_id not in known:
                raise ConfigError(f"shopping list references unknown item {item_id!r}")
            if n not in (1, 2):
                raise ConfigError(f"requested instances must be 1 or 2, got {n}")

        outcome = {"kind": "completed", "cause": None}
        try:
            self._run_states()
        except _Abort as ab:
            kind = "estop" if ab.kind == "estop" else "failed"
            payload = {"detail": ab.detail} if ab.detail else {}
            self.emit(self.state, kind, cause=ab.cause, **payload)
            self.state, _ = step_fsm(self.state, ab.kind)
            outcome = {
                "kind": "estop" if ab.kind == "estop" else "fault",
                "cause": ab.cause,
            }
        return RunLog(
            seed=self.seed,
            shopping_list=list(self.list.entries),
            events=self.events,
            outcome=outcome,
            items_retrieved=self.retrieved,
            total_sim_time=round(self.t, 6),
        )

    def _run_states(self):
        p = self.params
        self.emit(TaskState.START, "entered")
        self.emit(TaskState.START, "succeeded")
        self.advance(TaskState.LOCALIZE, "begin")

        # LOCALIZE
        self.emit(TaskState.LOCALIZE, "entered")
        self.sample_unrecoverable()
        sim = BaseSimulator(
            BasePose(*self.store.start_pose), grid=None, params=p.follow, rng=self.rng
        )
        sim.relocalize(p.reloc_sigma)
        self.spend(p.localize_duration_s)
        self.emit(TaskState.LOCALIZE, "succeeded")
        self.advance(TaskState.PLAN_TOUR, "localized")

        # PLAN_TOUR
        self.emit(TaskState.PLAN_TOUR, "entered")
        grid, check_grid = self.build_nav_grids()
        sim.grid = check_grid
        start = BasePose(*self.store.start_pose)
        try:
            goals = [
                item_goal_pose(self.store.item(i), grid, p.standoff_min, p.standoff_max)
                for i, _ in self.list.entries
            ]
            costs = pairwise_costs(grid, [start] + goals)
            tour = plan_tour(costs, start_index=0)
        except (GoalBlocked, InvalidEndpoint, Unreachable) as exc:
            raise _Abort("fault", CAUSE_SOFTWARE, f"tour planning: {exc}")
        self.spend(p.tour_plan_duration_s)
        self.emit(
            TaskState.PLAN_TOUR,
            "succeeded",
            tour_order=[int(i) for i in tour.order],
            tour_cost=round(tour_cost(costs, tour.order), 6),
            exact_matching=tour.exact_matching,
        )
        self.advance(TaskState.NAVIGATE, "tour_ready")

        # ItemLoop, in tour order (index 0 is the start pose)
        visit_order = [i - 1 for i in tour.order if i != 0]
        for loop_i, entry_idx in enumerate(visit_order):
            item_id, requested = self.list.entries[entry_idx]
            item = self.store.item(item_id)
            self._navigate(sim, grid, goals[entry_idx], item_id)
            self._relocalize(sim, item_id)
            self._shop_instances(sim, item, requested)
            last = loop_i == len(visit_order) - 1
            self.emit(TaskState.NEXT_ITEM, "entered", item=item_id)
            self.emit(TaskState.NEXT_ITEM, "succeeded", item=item_id)
            self.advance(
                TaskState.RETURN_HOME if last else TaskState.NAVIGATE,
                "list_exhausted" if last else "more_items",
            )

        # RETURN_HOME
        self.emit(TaskState.RETURN_HOME, "entered")
        self.sample_unrecoverable()
        cost, report = self._drive(sim, grid, start)
        self.emit(
            TaskState.RETURN_HOME,
            "succeeded",
            path_cost=round(cost, 6),
            drive_time=round(report.sim_time, 6),
        )
        self.advance(TaskState.DONE, "arrived_home")
        self.emit(TaskState.DONE, "entered")
        self.emit(TaskState.DONE, "succeeded")

    # -- item loop states

    def _drive(self, sim, grid, goal: BasePose):
        start_cell = grid.cell_of((sim.estimate.x, sim.estimate.y))
        goal_cell = grid.cell_of((goal.x, goal.y))
        try:
            waypoints, cost = grid_plan(grid, start_cell, goal_cell)
            report = follow_path(sim, decimate_collinear(waypoints), goal_yaw=goal.yaw)
        except (NoPath, InvalidEndpoint, FollowTimeout, FollowAbort) as exc:
            raise _Abort("fault", CAUSE_SOFTWARE, f"navigation: {exc}")
        self.t += report.sim_time
        if self.t > self.params.watchdog_s:
            raise _Abort("fault", CAUSE_SOFTWARE, "watchdog: sim time budget exceeded")
        return cost, report

    def _navigate(self, sim, grid, goal: BasePose, item_id: str):
        self.emit(TaskState.NAVIGATE, "entered", item=item_id)
        self.sample_unrecoverable()
        cost, report = self._drive(sim, grid, goal)
        self.emit(
            TaskState.NAVIGATE,
            "succeeded",
            item=item_id,
            path_cost=round(cost, 6),
            drive_time=round(report.sim_time, 6),
        )
        self.advance(TaskState.RELOCALIZE, "arrived")

    def _relocalize(self, sim, item_id: str):
        self.emit(TaskState.RELOCALIZE, "entered", item=item_id)
        sim.relocalize(self.params.reloc_sigma)
        self.spend(self.params.relocalize_duration_s)
        self.emit(TaskState.RELOCALIZE, "succeeded", item=item_id)
        self.advance(TaskState.DETECT, "relocalized")

    def _detect(self, item) -> tuple[int, bool] | None:
        """One detection round (with retries). None means the entry is skipped."""
        p, f = self.params, self.faults
        attempts = 0
        while True:
            self.emit(TaskState.DETECT, "entered", item=item.id)
            self.spend(p.detect_duration_s)
            if self.stock[item.id] <= 0:
                self.emit(TaskState.DETECT, "skipped", item=item.id, cause="out_of_stock")
                self.advance(TaskState.NEXT_ITEM, "out_of_stock")
                return None
            if self.rng.random() < f.detection_miss_rate:
                attempts += 1
                if attempts > f.detect_retries:
                    self.emit(
                        TaskState.DETECT, "skipped", item=item.id, cause="detect_exhausted"
                    )
                    self.advance(TaskState.NEXT_ITEM, "detect_exhausted")
                    return None
                self.emit(TaskState.DETECT, "retried", item=item.id, cause="detection_miss")
                self.advance(TaskState.DETECT, "detect_failed")
                continue
            detections = [
                grasping.InstanceDetection(
                    position=np.array([k * (item.dimensions[0] + p.instance_gap_m), 0.0, 0.0])
                )
                for k in range(self.stock[item.id])
            ]
            chosen = grasping.select_instance(detections)
            wrong_item = self.rng.random() < f.detection_misclass_rate
            self.emit(
                TaskState.DETECT,
                "succeeded",
                item=item.id,
                instances=len(detections),
                chosen=chosen,
            )
            self.advance(TaskState.PLAN_GRASP, "detected")
            return chosen, wrong_item

    def _plan_grasp(self, item, chosen: int):
        """None means the entry is skipped (anchor missing)."""
        p = self.params
        self.emit(TaskState.PLAN_GRASP, "entered", item=item.id)
        g_type, e_type = self.classification[item.id]
        depth = chosen * (item.dimensions[0] + p.instance_gap_m)
        try:
            pose = grasping.grasp_pose(item, g_type, pose=instance_pose(item, depth))
        except PlanInfeasible as exc:
            self.emit(TaskState.PLAN_GRASP, "skipped", item=item.id, cause=str(exc))
            self.advance(TaskState.NEXT_ITEM, "plan_infeasible")
            return None
        plan = grasping.GraspPlan(
            grasp_type=g_type,
            extraction_type=e_type,
            tool=grasping.TOOL_FOR_GRASP[g_type],
            tool_pose=pose,
            approach_axis=item.outward_axis.copy(),
        )
        self.emit(
            TaskState.PLAN_GRASP,
            "succeeded",
            item=item.id,
            grasp_type=g_type.value,
            extraction_type=e_type.value,
            tool=plan.tool.value,
        )
        self.advance(TaskState.PLAN_MOTION, "grasp_planned")
        return plan

    def _plan_motion(self, sim, item, plan) -> bool:
        """False means the entry is skipped (plan attempts exhausted)."""
        p, f = self.params, self.faults
        base = sim.estimate
        world = self.bay_world(item, base)
        T_base = pose_xyzyaw(base.x, base.y, 0.0, base.yaw)
        target = np.linalg.inv(T_base) @ plan.tool_pose
        home = np.asarray(
            p.home_q if p.home_q is not None else np.zeros(self.robot.dof), dtype=float
        )
        attempts = 0
        while True:
            self.emit(TaskState.PLAN_MOTION, "entered", item=item.id)
            self.spend(p.plan_duration_s)
            cause = None
            if self.rng.random() < f.motion_plan_fault_rate:
                cause = "injected_motion_plan_fault"
            else:
                try:
                    path = plan_to_pose(self.roadmap, self.cmap, world, home, target, p.plan)
                    self.emit(
                        TaskState.PLAN_MOTION,
                        "succeeded",
                        item=item.id,
                        waypoints=len(path.waypoints),
                        joint_length=round(path.length, 6),
                    )
                    self.advance(TaskState.EXECUTE_GRASP, "motion_planned")
                    return True
                except (NoPath, StartInCollision) as exc:
                    cause = f"planner: {exc}"
            attempts += 1
            if attempts > f.motion_retries:
                self.emit(TaskState.PLAN_MOTION, "skipped", item=item.id, cause=cause)
                self.advance(TaskState.NEXT_ITEM, "plan_exhausted")
                return False
            self.emit(TaskState.PLAN_MOTION, "retried", item=item.id, cause=cause)
            self.advance(TaskState.PLAN_MOTION, "plan_failed")

    def _shop_instances(self, sim, item, requested: int):
        """Detect/grasp/place up to `requested` instances at the current bay.

        Leaves the FSM cursor at NEXT_ITEM in every outcome.
        """
        p, f = self.params, self.faults
        placed = 0
        while placed < requested:
            grasp_attempts = 0
            while True:
                found = self._detect(item)
                if found is None:
                    return
                chosen, wrong_item = found

                plan = self._plan_grasp(item, chosen)
                if plan is None:
                    return

                if not self._plan_motion(sim, item, plan):
                    return

                # EXECUTE_GRASP
                self.emit(TaskState.EXECUTE_GRASP, "entered", item=item.id)
                self.sample_unrecoverable()
                self.spend(p.grasp_duration_s)
                success, signals = grasping.simulate_grasp_outcome(
                    plan, item, self.rng, p.grasp_success_prob
                )
                if wrong_item:
                    # misclassified instance: the tool holds the wrong mass
                    signals = replace(signals, tip_wrench=signals.tip_wrench * 0.2)
                self.emit(TaskState.EXECUTE_GRASP, "succeeded", item=item.id)
                self.advance(TaskState.VERIFY_GRASP, "executed")

                # VERIFY_GRASP
                self.emit(TaskState.VERIFY_GRASP, "entered", item=item.id)
                weight = item.mass * grasping.GRAVITY
                if grasping.verify_grasp(signals, plan.tool, weight):
                    self.emit(TaskState.VERIFY_GRASP, "succeeded", item=item.id, verified=True)
                    self.advance(TaskState.PLACE, "verified_true")
                    break
                grasp_attempts += 1
                if grasp_attempts > f.grasp_retries:
                    self.emit(
                        TaskState.VERIFY_GRASP, "skipped", item=item.id, cause="grasp_exhausted"
                    )
                    self.advance(TaskState.NEXT_ITEM, "verified_false_exhausted")
                    return
                self.emit(TaskState.VERIFY_GRASP, "retried", item=item.id, cause="verify_false")
                self.advance(TaskState.DETECT, "verified_false")

            # PLACE
            self.emit(TaskState.PLACE, "entered", item=item.id)
            self.sample_unrecoverable()
            self.spend(p.place_duration_s)
            self.stock[item.id] -= 1
            self.retrieved.append(item.id)
            placed += 1
            self.emit(TaskState.PLACE, "succeeded", item=item.id)
            if placed < requested:
                self.advance(TaskState.DETECT, "placed_more_instances")
            else:
                self.advance(TaskState.NEXT_ITEM, "placed")


def run_task(
    store: StoreModel,
    shopping_list: ShoppingList,
    robot: RobotModel,
    roadmap: Roadmap,
    cmap: CollisionMap,
    faults: FaultConfig,
    params: TaskParams,
    seed: int,
) -> RunLog:
    """Execute one full shopping run; deterministic per (inputs, seed)."""
    if roadmap.model is None:
        roadmap.model = robot
    return _Runner(store, shopping_list, robot, roadmap, cmap, faults, params, seed).run()


def campaign_run_seeds(seed: int, n_runs: int) -> list[int]:
    """Derived per-run seeds (stable fan-out from the campaign seed)."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_runs)]


def run_campaign_run(store, robot, roadmap, cmap, faults, params, run_seed: int) -> RunLog:
    """One campaign run: fresh shopping list from the run seed, then run_task."""
    shopping_list = generate_shopping_list(store, run_seed)
    return run_task(store, shopping_list, robot, roadmap, cmap, faults, params, run_seed)


def run_campaign(
    store: StoreModel,
    robot: RobotModel,
    roadmap: Roadmap,
    cmap: CollisionMap,
    faults: FaultConfig,
    params: TaskParams,
    n_runs: int,
    seed: int,
    time_budget_s: float | None = None,
) -> list[RunLog]:
    """Run n_runs independent shopping tasks with derived per-run seeds.

    A sim-time budget truncates the campaign after the run in progress.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    logs: list[RunLog] = []
    spent = 0.0
    for run_seed in campaign_run_seeds(seed, n_runs):
        log = run_campaign_run(store, robot, roadmap, cmap, faults, params, run_seed)
        logs.append(log)
        spent += log.total_sim_time
        if time_budget_s is not None and spent >= time_budget_s:
            break
    return logs
