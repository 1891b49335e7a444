"""Small rigid-transform helpers used throughout the package.

Poses are 4x4 homogeneous matrices (float64). Planar base poses use
(x, y, yaw) with yaw normalized to (-pi, pi].
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.transform import Rotation


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation from roll-pitch-yaw (applied x, then y, then z)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def transform(rotation: np.ndarray | None = None, translation=None) -> np.ndarray:
    """Build a 4x4 homogeneous transform."""
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = rotation
    if translation is not None:
        T[:3, 3] = np.asarray(translation, dtype=float)
    return T


def translation(x: float, y: float, z: float) -> np.ndarray:
    return transform(translation=(x, y, z))


def axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation about an arbitrary unit axis (Rodrigues)."""
    axis = np.asarray(axis, dtype=float)
    return Rotation.from_rotvec(axis * angle).as_matrix()


def rotation_error(r_target: np.ndarray, r_current: np.ndarray) -> np.ndarray:
    """World-frame rotation vector taking r_current onto r_target."""
    return Rotation.from_matrix(r_target @ r_current.T).as_rotvec()


def rotation_angle(r_target: np.ndarray, r_current: np.ndarray) -> float:
    """Magnitude of the relative rotation between two orientations."""
    return float(np.linalg.norm(rotation_error(r_target, r_current)))


def pose_xyzyaw(x: float, y: float, z: float, yaw: float) -> np.ndarray:
    """4x4 pose from a planar position plus yaw about z."""
    return transform(rot_z(yaw), (x, y, z))


def is_rigid(T: np.ndarray, tol: float = 1e-9) -> bool:
    """True when the rotation block is orthonormal with determinant +1."""
    R = T[:3, :3]
    return (
        np.allclose(R.T @ R, np.eye(3), atol=tol)
        and abs(np.linalg.det(R) - 1.0) < 1e-6
        and np.allclose(T[3], [0, 0, 0, 1], atol=tol)
    )
