"""Base motion simulation: pure-pursuit path following on a velocity-integrator
base, 200 Hz odometry + 5 Hz visual-odometry pose fusion, and relocalization.

Odometry drift is modeled as a translation scale error: each measured delta
is the true delta times (1 + drift_rate), so dead-reckoning error grows as
drift_rate x distance travelled. VO poses drift together with odometry (VO
is itself a dead-reckoning source); only relocalization snaps the estimate
back to the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FollowAbort, FollowTimeout, StreamError
from .nav import BasePose
from .transforms import normalize_angle
from .voxels import OccupancyGrid


@dataclass
class OdomSample:
    t: float
    delta: tuple[float, float, float]  # measured body-frame (dx, dy, dyaw)
    true_delta: tuple[float, float, float]


@dataclass
class VoSample:
    t: float
    pose: BasePose  # measured absolute pose (drifted)


@dataclass
class PoseEstimate:
    estimated: BasePose
    true_pose: BasePose
    accumulated_drift: float = 0.0


@dataclass
class FollowParams:
    lookahead: float = 0.25
    v_max: float = 0.5
    w_max: float = 3.0
    pos_tol: float = 0.05
    yaw_tol: float = 0.1
    rate_hz: float = 200.0
    vo_rate_hz: float = 5.0
    vo_blend: float = 0.5
    drift_rate: float = 0.0  # translation scale error per meter
    vo_sigma: float = 0.0  # VO measurement noise (m)
    timeout_factor: float = 3.0
    timeout_margin_s: float = 3.0


@dataclass
class FollowReport:
    arrived: bool
    sim_time: float
    distance: float
    max_cross_track: float
    terminal_pos_error: float  # estimated pose vs final waypoint
    terminal_yaw_error: float
    true_pos_error: float  # ground truth vs final waypoint
    trajectory: list[PoseEstimate] = field(default_factory=list, repr=False)


def _advance(pose: BasePose, dx: float, dy: float, dyaw: float) -> BasePose:
    """Apply a body-frame delta to a pose."""
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return BasePose(
        x=pose.x + c * dx - s * dy,
        y=pose.y + s * dx + c * dy,
        yaw=normalize_angle(pose.yaw + dyaw),
    )


def fuse_pose(
    odom_stream: list[OdomSample],
    vo_stream: list[VoSample],
    initial: BasePose,
    true_initial: BasePose | None = None,
    vo_blend: float = 0.5,
) -> list[PoseEstimate]:
    """Integrate 200 Hz odometry deltas, blending toward 5 Hz VO poses.

    Timestamps of each stream must be non-decreasing (StreamError otherwise).
    Returns one PoseEstimate per odometry sample. Zero-noise streams
    reproduce ground truth exactly; with VO disabled (empty stream) the
    output is pure odometry integration.
    """
    for stream in (odom_stream, vo_stream):
        ts = [s.t for s in stream]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise StreamError("stream timestamps must be non-decreasing")

    est = BasePose(initial.x, initial.y, initial.yaw)
    truth = true_initial or BasePose(initial.x, initial.y, initial.yaw)
    drift = 0.0
    out: list[PoseEstimate] = []
    vo_i = 0
    for od in odom_stream:
        est = _advance(est, *od.delta)
        truth = _advance(truth, *od.true_delta)
        drift += math.hypot(
            od.delta[0] - od.true_delta[0], od.delta[1] - od.true_delta[1]
        )
        while vo_i < len(vo_stream) and vo_stream[vo_i].t <= od.t:
            vo = vo_stream[vo_i].pose
            est = BasePose(
                x=est.x + vo_blend * (vo.x - est.x),
                y=est.y + vo_blend * (vo.y - est.y),
                yaw=normalize_angle(est.yaw + vo_blend * normalize_angle(vo.yaw - est.yaw)),
            )
            vo_i += 1
        out.append(
            PoseEstimate(
                estimated=BasePose(est.x, est.y, est.yaw),
                true_pose=BasePose(truth.x, truth.y, truth.yaw),
                accumulated_drift=drift,
            )
        )
    return out


def relocalize(
    est: PoseEstimate, noise_sigma: float, rng: np.random.Generator | None = None
) -> PoseEstimate:
    """Snap the estimate onto ground truth plus map-matching noise.

    Position noise is Gaussian with sigma per axis, yaw noise sigma/2;
    accumulated drift resets to zero.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if noise_sigma > 0:
        nx, ny = rng.normal(0.0, noise_sigma, size=2)
        nyaw = rng.normal(0.0, noise_sigma / 2)
    else:
        nx = ny = nyaw = 0.0
    t = est.true_pose
    return PoseEstimate(
        estimated=BasePose(t.x + nx, t.y + ny, normalize_angle(t.yaw + nyaw)),
        true_pose=BasePose(t.x, t.y, t.yaw),
        accumulated_drift=0.0,
    )


class BaseSimulator:
    """Owns the base's true pose, its drifting estimate, and sim time."""

    def __init__(
        self,
        pose: BasePose,
        grid: OccupancyGrid | None = None,
        params: FollowParams | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.params = params or FollowParams()
        self.truth = BasePose(pose.x, pose.y, pose.yaw)
        self.estimate = BasePose(pose.x, pose.y, pose.yaw)
        self.drift = 0.0
        self.grid = grid
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.time = 0.0

    @property
    def state(self) -> PoseEstimate:
        return PoseEstimate(
            estimated=BasePose(self.estimate.x, self.estimate.y, self.estimate.yaw),
            true_pose=BasePose(self.truth.x, self.truth.y, self.truth.yaw),
            accumulated_drift=self.drift,
        )

    def relocalize(self, noise_sigma: float) -> PoseEstimate:
        fused = relocalize(self.state, noise_sigma, self.rng)
        self.estimate = fused.estimated
        self.drift = 0.0
        return fused

    def _step(self, v: float, w: float, dt: float) -> None:
        """Advance truth by a unicycle step and the estimate by drifted odometry."""
        dx, dyaw = v * dt, w * dt
        self.truth = _advance(self.truth, dx, 0.0, dyaw)
        scale = 1.0 + self.params.drift_rate
        self.estimate = _advance(self.estimate, dx * scale, 0.0, dyaw)
        self.drift += abs(dx) * abs(self.params.drift_rate)
        self.time += dt


def _nearest_on_polyline(p: np.ndarray, wp: np.ndarray) -> float:
    """Distance from a point to a polyline (cross-track error)."""
    best = math.inf
    for a, b in zip(wp[:-1], wp[1:]):
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(a + t * ab - p)))
    return best


def _lookahead_point(p: np.ndarray, wp: np.ndarray, lookahead: float) -> np.ndarray:
    """First polyline point at `lookahead` from p, else the final waypoint."""
    for a, b in zip(wp[:-1], wp[1:]):
        d = b - a
        seg = float(np.linalg.norm(d))
        if seg == 0:
            continue
        # solve |a + t d - p| = lookahead on t in [0, 1], take the larger root
        f = a - p
        aa = seg * seg
        bb = 2 * float(f @ d)
        cc = float(f @ f) - lookahead * lookahead
        disc = bb * bb - 4 * aa * cc
        if disc < 0:
            continue
        t = (-bb + math.sqrt(disc)) / (2 * aa)
        if 0.0 <= t <= 1.0:
            return a + t * d
    return wp[-1]


def follow_path(
    sim: BaseSimulator,
    waypoints: np.ndarray,
    goal_yaw: float | None = None,
) -> FollowReport:
    """Drive the simulated base along a 2D waypoint polyline.

    Pure pursuit steers toward a lookahead point on the path; arrival needs
    the estimated pose within pos_tol of the final waypoint (and yaw_tol of
    goal_yaw when given). Raises FollowAbort on predicted collision and
    FollowTimeout when progress stalls past the time budget.
    """
    p = sim.params
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(wp) == 0:
        raise ValueError("waypoints must be non-empty")
    if sim.grid is not None:
        for point in wp:
            if not sim.grid.is_free(sim.grid.cell_of(point)):
                raise FollowAbort(f"waypoint {point} lies inside an obstacle")

    path_len = float(np.sum(np.linalg.norm(np.diff(wp, axis=0), axis=1))) if len(wp) > 1 else 0.0
    budget = p.timeout_factor * (path_len / p.v_max) + p.timeout_margin_s
    dt = 1.0 / p.rate_hz
    vo_every = max(1, int(round(p.rate_hz / p.vo_rate_hz)))

    goal = wp[-1]
    max_xtrack = 0.0
    distance = 0.0
    t0 = sim.time
    step_count = 0
    trajectory: list[PoseEstimate] = []

    def arrived() -> bool:
        e = sim.estimate
        if math.hypot(e.x - goal[0], e.y - goal[1]) > p.pos_tol:
            return False
        if goal_yaw is None:
            return True
        return abs(normalize_angle(e.yaw - goal_yaw)) <= p.yaw_tol

    while not arrived():
        if sim.time - t0 > budget:
            raise FollowTimeout(
                f"no arrival after {sim.time - t0:.1f} s (budget {budget:.1f} s)"
            )
        e = sim.estimate
        pos = np.array([e.x, e.y])
        dist_goal = float(np.linalg.norm(goal - pos))

        if dist_goal <= p.pos_tol and goal_yaw is not None:
            # in position: rotate in place onto the goal yaw
            err = normalize_angle(goal_yaw - e.yaw)
            w = float(np.clip(err / dt, -p.w_max, p.w_max))
            sim._step(0.0, w, dt)
        else:
            target = _lookahead_point(pos, wp, p.lookahead) if len(wp) > 1 else goal
            if dist_goal < p.lookahead:
                target = goal
            heading = math.atan2(target[1] - pos[1], target[0] - pos[0])
            alpha = normalize_angle(heading - e.yaw)
            if abs(alpha) > math.pi / 3:
                w = p.w_max if alpha > 0 else -p.w_max
                sim._step(0.0, w, dt)
            else:
                v = min(p.v_max, max(0.5 * p.v_max, dist_goal))
                ld = max(p.lookahead, 1e-6)
                w = float(np.clip(2.0 * v * math.sin(alpha) / ld, -p.w_max, p.w_max))
                sim._step(v, w, dt)
                distance += v * dt

        step_count += 1
        if sim.grid is not None:
            cell = sim.grid.cell_of((sim.truth.x, sim.truth.y))
            if not sim.grid.is_free(cell):
                raise FollowAbort(f"base entered occupied cell {cell}")
        if p.vo_sigma >= 0 and step_count % vo_every == 0:
            # VO pose: truth plus the current dead-reckoning drift offset
            vo_x = sim.truth.x + (sim.estimate.x - sim.truth.x)
            vo_y = sim.truth.y + (sim.estimate.y - sim.truth.y)
            if p.vo_sigma > 0:
                vo_x += float(sim.rng.normal(0.0, p.vo_sigma))
                vo_y += float(sim.rng.normal(0.0, p.vo_sigma))
            b = p.vo_blend
            sim.estimate = BasePose(
                x=sim.estimate.x + b * (vo_x - sim.estimate.x),
                y=sim.estimate.y + b * (vo_y - sim.estimate.y),
                yaw=sim.estimate.yaw,
            )
        xt = _nearest_on_polyline(np.array([sim.truth.x, sim.truth.y]), wp) if len(wp) > 1 else 0.0
        max_xtrack = max(max_xtrack, xt)
        if step_count % 20 == 0:
            trajectory.append(sim.state)

    e = sim.estimate
    return FollowReport(
        arrived=True,
        sim_time=sim.time - t0,
        distance=distance,
        max_cross_track=max_xtrack,
        terminal_pos_error=math.hypot(e.x - goal[0], e.y - goal[1]),
        terminal_yaw_error=(
            abs(normalize_angle(e.yaw - goal_yaw)) if goal_yaw is not None else 0.0
        ),
        true_pos_error=math.hypot(sim.truth.x - goal[0], sim.truth.y - goal[1]),
        trajectory=trajectory,
    )
