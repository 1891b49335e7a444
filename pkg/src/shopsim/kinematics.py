"""Serial-chain robot model: forward kinematics, Jacobian, damped least-squares
inverse kinematics, collision-sphere voxelization, and self-collision tests.

Joint types:
  - "revolute": one value, rotation about `axis` in the joint frame.
  - "prismatic": one value, translation along `axis`.
  - "planar": three values (x, y, yaw) for a pseudo-holonomic base at the
    chain root; translation happens in the joint frame, then yaw about z.

Link i is the frame after joint i; collision spheres attach to links in
local coordinates. The tool frame is a fixed transform on the last link.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, IkFailure
from .transforms import (
    axis_angle_matrix,
    rot_z,
    rotation_error,
    rpy_matrix,
    transform,
)

HALF_DIAG = math.sqrt(3.0) / 2.0  # voxel half-diagonal in units of resolution


@dataclass(frozen=True)
class Joint:
    kind: str  # "revolute" | "prismatic" | "planar"
    origin: np.ndarray  # (4,4) fixed parent->joint transform
    axis: np.ndarray | None = None  # (3,) unit, unused for planar
    limits: np.ndarray = None  # (dof, 2)

    @property
    def dof(self) -> int:
        return 3 if self.kind == "planar" else 1


@dataclass
class RobotModel:
    """Kinematic chain plus per-link collision spheres and a tool frame.

    `spheres[i]` attaches to the frame after joint i; `base_spheres` attach
    to the static root frame (link index -1), adjacent only to link 0.
    """

    joints: list[Joint]
    spheres: list[list[tuple[np.ndarray, float]]]  # per link: (center, radius)
    tool: np.ndarray  # (4,4) on the last link
    base_spheres: list[tuple[np.ndarray, float]] = field(default_factory=list)
    name: str = "robot"

    # flattened sphere table, filled in __post_init__
    sphere_link: np.ndarray = field(init=False, repr=False)
    sphere_center: np.ndarray = field(init=False, repr=False)
    sphere_radius: np.ndarray = field(init=False, repr=False)
    _self_pairs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.spheres) != len(self.joints):
            raise ConfigError("need one sphere list per link")
        for j in self.joints:
            lo, hi = j.limits[:, 0], j.limits[:, 1]
            if np.any(lo >= hi):
                raise ConfigError(f"joint limits must satisfy lo < hi, got {j.limits}")
        links, centers, radii = [], [], []
        for center, radius in self.base_spheres:
            links.append(-1)
            centers.append(np.asarray(center, dtype=float))
            radii.append(float(radius))
        for link, entries in enumerate(self.spheres):
            for center, radius in entries:
                links.append(link)
                centers.append(np.asarray(center, dtype=float))
                radii.append(float(radius))
        self.sphere_link = np.asarray(links, dtype=int)
        self.sphere_center = (
            np.asarray(centers, dtype=float) if centers else np.zeros((0, 3))
        )
        self.sphere_radius = np.asarray(radii, dtype=float)
        # sphere pairs on non-adjacent links, for self-collision checks
        pairs = [
            (a, b)
            for a in range(len(links))
            for b in range(a + 1, len(links))
            if abs(links[a] - links[b]) >= 2
        ]
        self._self_pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)

    @property
    def dof(self) -> int:
        return sum(j.dof for j in self.joints)

    @property
    def n_links(self) -> int:
        return len(self.joints)

    def lower_limits(self) -> np.ndarray:
        return np.concatenate([j.limits[:, 0] for j in self.joints])

    def upper_limits(self) -> np.ndarray:
        return np.concatenate([j.limits[:, 1] for j in self.joints])

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower_limits(), self.upper_limits())

    def within_limits(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(
            np.all(q >= self.lower_limits() - tol)
            and np.all(q <= self.upper_limits() + tol)
        )

    def max_reach(self) -> float:
        """Upper bound on the distance of any sphere surface from the root."""
        reach = 0.0
        for j in self.joints:
            reach += float(np.linalg.norm(j.origin[:3, 3]))
            if j.kind == "prismatic":
                reach += float(np.max(np.abs(j.limits)))
            elif j.kind == "planar":
                reach += float(np.max(np.abs(j.limits[:2])))
        extent = 0.0
        if len(self.sphere_radius):
            extent = float(
                np.max(np.linalg.norm(self.sphere_center, axis=1) + self.sphere_radius)
            )
        return reach + extent + float(np.linalg.norm(self.tool[:3, 3]))


def _check_q(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise DimensionError(f"expected q of length {model.dof}, got shape {q.shape}")
    return q


def _joint_motion(joint: Joint, values: np.ndarray) -> np.ndarray:
    if joint.kind == "revolute":
        return transform(axis_angle_matrix(joint.axis, float(values[0])))
    if joint.kind == "prismatic":
        return transform(translation=joint.axis * float(values[0]))
    if joint.kind == "planar":
        T = transform(rot_z(float(values[2])), (float(values[0]), float(values[1]), 0.0))
        return T
    raise ConfigError(f"unknown joint kind {joint.kind!r}")


def forward_kinematics(model: RobotModel, q) -> tuple[list[np.ndarray], np.ndarray]:
    """Link poses (one per joint, after its motion) and the tool pose."""
    q = _check_q(model, q)
    poses = []
    T = np.eye(4)
    k = 0
    for joint in model.joints:
        T = T @ joint.origin @ _joint_motion(joint, q[k : k + joint.dof])
        poses.append(T.copy())
        k += joint.dof
    return poses, poses[-1] @ model.tool


def link_transforms_batch(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """(n_links, M, 4, 4) link poses for a batch of configurations."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.dof:
        raise DimensionError(f"expected (M, {model.dof}) batch, got {Q.shape}")
    m = Q.shape[0]
    out = np.empty((model.n_links, m, 4, 4))
    T = np.broadcast_to(np.eye(4), (m, 4, 4)).copy()
    k = 0
    for li, joint in enumerate(model.joints):
        vals = Q[:, k : k + joint.dof]
        motion = np.broadcast_to(np.eye(4), (m, 4, 4)).copy()
        if joint.kind == "revolute":
            # Rodrigues formula batched over angles
            a = joint.axis
            K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
            th = vals[:, 0]
            R = (
                np.eye(3)[None]
                + np.sin(th)[:, None, None] * K[None]
                + (1 - np.cos(th))[:, None, None] * (K @ K)[None]
            )
            motion[:, :3, :3] = R
        elif joint.kind == "prismatic":
            motion[:, :3, 3] = joint.axis[None, :] * vals[:, :1]
        else:  # planar
            yaw = vals[:, 2]
            c, s = np.cos(yaw), np.sin(yaw)
            motion[:, 0, 0] = c
            motion[:, 0, 1] = -s
            motion[:, 1, 0] = s
            motion[:, 1, 1] = c
            motion[:, 0, 3] = vals[:, 0]
            motion[:, 1, 3] = vals[:, 1]
        T = T @ joint.origin[None] @ motion
        out[li] = T
        k += joint.dof
    return out


def sphere_centers_batch(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """(M, S, 3) world positions of all collision spheres per configuration."""
    links = link_transforms_batch(model, Q)  # (L, M, 4, 4)
    m = links.shape[1]
    s = len(model.sphere_radius)
    out = np.empty((m, s, 3))
    for si in range(s):
        link = model.sphere_link[si]
        if link < 0:  # static base link
            out[:, si, :] = model.sphere_center[si]
            continue
        T = links[link]
        out[:, si, :] = T[:, :3, :3] @ model.sphere_center[si] + T[:, :3, 3]
    return out


def jacobian(model: RobotModel, q) -> np.ndarray:
    """6 x DoF geometric Jacobian of the tool (linear over angular)."""
    q = _check_q(model, q)
    link_poses, tool_pose = forward_kinematics(model, q)
    p_tool = tool_pose[:3, 3]
    J = np.zeros((6, model.dof))
    T_prev = np.eye(4)
    k = 0
    for li, joint in enumerate(model.joints):
        frame = T_prev @ joint.origin
        R = frame[:3, :3]
        if joint.kind == "revolute":
            z = R @ joint.axis
            J[:3, k] = np.cross(z, p_tool - frame[:3, 3])
            J[3:, k] = z
        elif joint.kind == "prismatic":
            J[:3, k] = R @ joint.axis
        else:  # planar: x, y translation then yaw about the frame z axis
            J[:3, k] = R[:, 0]
            J[:3, k + 1] = R[:, 1]
            z = R[:, 2]
            p_rot = frame[:3, 3] + R[:, 0] * q[k] + R[:, 1] * q[k + 1]
            J[:3, k + 2] = np.cross(z, p_tool - p_rot)
            J[3:, k + 2] = z
        T_prev = link_poses[li]
        k += joint.dof
    return J


def solve_ik(
    model: RobotModel,
    target: np.ndarray,
    seed_q,
    pos_tol: float = 1e-4,
    rot_tol: float | None = 1e-3,
    max_iters: int = 100,
    damping: float = 1e-2,
    step_clamp: float = 0.2,
) -> np.ndarray:
    """Damped least-squares IK toward a 4x4 target pose.

    Returns the configuration nearest the seed that meets the tolerances,
    clipped to joint limits each iterate. rot_tol=None solves position only.
    Raises IkFailure when the budget runs out (unreachable target or poor
    seed).
    """
    if pos_tol <= 0 or (rot_tol is not None and rot_tol <= 0):
        raise ConfigError("tolerances must be > 0")
    target = np.asarray(target, dtype=float)
    q = model.clamp(_check_q(model, seed_q).copy())
    residual = math.inf
    for _ in range(max_iters):
        _, tool = forward_kinematics(model, q)
        err_p = target[:3, 3] - tool[:3, 3]
        if rot_tol is None:
            err = err_p
        else:
            err = np.concatenate([err_p, rotation_error(target[:3, :3], tool[:3, :3])])
        residual = np.linalg.norm(err)
        pos_ok = np.linalg.norm(err_p) <= pos_tol
        rot_ok = rot_tol is None or np.linalg.norm(err[3:]) <= rot_tol
        if pos_ok and rot_ok:
            return q
        J = jacobian(model, q)
        if rot_tol is None:
            J = J[:3]
        JJt = J @ J.T + (damping**2) * np.eye(J.shape[0])
        dq = J.T @ np.linalg.solve(JJt, err)
        peak = np.max(np.abs(dq))
        if peak > step_clamp:
            dq *= step_clamp / peak
        q = model.clamp(q + dq)
    raise IkFailure(f"no convergence after {max_iters} iterations (residual {residual:.3g})")


def robot_voxels(model: RobotModel, q, map_origin, resolution: float) -> set:
    """Voxel indices conservatively covered by the robot at configuration q.

    A voxel counts when its center lies within radius + half voxel diagonal
    of some collision-sphere center, so every point strictly inside a sphere
    maps to an included voxel.
    """
    q = _check_q(model, q)
    if len(model.sphere_radius) == 0:
        return set()
    centers = sphere_centers_batch(model, q[None])[0]
    origin = np.asarray(map_origin, dtype=float)
    out = set()
    half_diag = HALF_DIAG * resolution
    for c, r in zip(centers, model.sphere_radius):
        bound = r + half_diag
        lo = np.floor((c - bound - origin) / resolution).astype(int)
        hi = np.floor((c + bound - origin) / resolution).astype(int)
        ix, iy, iz = np.meshgrid(
            np.arange(lo[0], hi[0] + 1),
            np.arange(lo[1], hi[1] + 1),
            np.arange(lo[2], hi[2] + 1),
            indexing="ij",
        )
        idx = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)
        vc = origin + (idx + 0.5) * resolution
        keep = np.linalg.norm(vc - c, axis=1) <= bound
        out.update(map(tuple, idx[keep]))
    return out


def self_collision(model: RobotModel, q) -> bool:
    """True iff any two spheres on non-adjacent links overlap."""
    q = _check_q(model, q)
    return bool(self_collision_batch(model, q[None])[0])


def self_collision_batch(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """(M,) boolean mask of self-colliding configurations."""
    Q = np.asarray(Q, dtype=float)
    if model._self_pairs.shape[0] == 0:
        return np.zeros(Q.shape[0], dtype=bool)
    centers = sphere_centers_batch(model, Q)
    a = model._self_pairs[:, 0]
    b = model._self_pairs[:, 1]
    d2 = np.sum((centers[:, a, :] - centers[:, b, :]) ** 2, axis=2)
    thresh = (model.sphere_radius[a] + model.sphere_radius[b]) ** 2
    return np.any(d2 < thresh[None, :], axis=1)


# ---------------------------------------------------------------------------
# JSON schema


def _origin_from_dict(d: dict | None) -> np.ndarray:
    if not d:
        return np.eye(4)
    xyz = d.get("xyz", (0.0, 0.0, 0.0))
    rpy = d.get("rpy", (0.0, 0.0, 0.0))
    return transform(rpy_matrix(*rpy), xyz)


def robot_from_dict(data: dict) -> RobotModel:
    try:
        joints = []
        for jd in data["joints"]:
            kind = jd["type"]
            if kind == "planar":
                limits = np.asarray(jd["limits"], dtype=float).reshape(3, 2)
                axis = None
            else:
                limits = np.asarray(jd["limits"], dtype=float).reshape(1, 2)
                axis = np.asarray(jd["axis"], dtype=float)
                axis = axis / np.linalg.norm(axis)
            joints.append(
                Joint(
                    kind=kind,
                    origin=_origin_from_dict(jd.get("origin")),
                    axis=axis,
                    limits=limits,
                )
            )
        spheres: list[list] = [[] for _ in joints]
        base_spheres: list = []
        for sd in data.get("spheres", []):
            link = int(sd["link"])
            entry = (np.asarray(sd["center"], dtype=float), float(sd["radius"]))
            if link == -1:
                base_spheres.append(entry)
            elif 0 <= link < len(joints):
                spheres[link].append(entry)
            else:
                raise ConfigError(f"sphere link {link} out of range")
        tool_d = data.get("tool", {})
        link = int(tool_d.get("link", len(joints) - 1))
        if link != len(joints) - 1:
            raise ConfigError("tool frame must sit on the last link")
        tool = _origin_from_dict(tool_d.get("offset"))
        return RobotModel(
            joints=joints,
            spheres=spheres,
            tool=tool,
            base_spheres=base_spheres,
            name=data.get("name", "robot"),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed robot file: {exc}") from exc


def load_robot(path) -> RobotModel:
    with open(path) as fh:
        return robot_from_dict(json.load(fh))


def save_robot(model: RobotModel, path) -> None:
    def origin_dict(T):
        R = T[:3, :3]
        yaw = math.atan2(R[1, 0], R[0, 0])
        pitch = math.atan2(-R[2, 0], math.hypot(R[2, 1], R[2, 2]))
        roll = math.atan2(R[2, 1], R[2, 2])
        return {"xyz": T[:3, 3].tolist(), "rpy": [roll, pitch, yaw]}

    data = {
        "name": model.name,
        "joints": [
            {
                "type": j.kind,
                **({"axis": j.axis.tolist()} if j.axis is not None else {}),
                "origin": origin_dict(j.origin),
                "limits": j.limits.tolist() if j.kind == "planar" else j.limits[0].tolist(),
            }
            for j in model.joints
        ],
        "spheres": [
            {"link": -1, "center": c.tolist(), "radius": r}
            for c, r in model.base_spheres
        ]
        + [
            {"link": link, "center": c.tolist(), "radius": r}
            for link, entries in enumerate(model.spheres)
            for c, r in entries
        ],
        "tool": {"link": len(model.joints) - 1, "offset": origin_dict(model.tool)},
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
