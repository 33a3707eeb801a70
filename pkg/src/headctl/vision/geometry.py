"""Quaternions, rotation matrices and Euler-angle conversions.

Quaternions are ``(w, x, y, z)``.  Angles follow the head frame: pitch
``theta`` about x, roll ``phi`` about y, yaw ``psi`` about z, composed
intrinsically as ``R = Rx(theta) Ry(phi) Rz(psi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GimbalLock

GIMBAL_TOL = 1e-9


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])


def quat_multiply(a, b) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def axis_angle_quat(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle_rad / 2)], np.sin(angle_rad / 2) * axis])


def rotation_angle(qa, qb) -> float:
    """Angle in radians of the relative rotation between two unit quaternions."""
    # atan2 form stays accurate near zero where 2*acos(|<qa, qb>|) does not
    rel = quat_multiply(quat_conjugate(qa), qb)
    return float(2.0 * np.arctan2(np.linalg.norm(rel[1:]), abs(rel[0])))


def rpy_to_quat(theta_deg: float, phi_deg: float, psi_deg: float = 0.0) -> np.ndarray:
    qx = axis_angle_quat((1, 0, 0), np.radians(theta_deg))
    qy = axis_angle_quat((0, 1, 0), np.radians(phi_deg))
    qz = axis_angle_quat((0, 0, 1), np.radians(psi_deg))
    return quat_normalize(quat_multiply(quat_multiply(qx, qy), qz))


def quat_to_rpy(q) -> tuple[float, float, float]:
    """``(pitch, roll, yaw)`` in degrees from ``R = Rx(pitch) Ry(roll) Rz(yaw)``."""
    R = quat_to_matrix(quat_normalize(q))
    s = float(np.clip(R[0, 2], -1.0, 1.0))
    if abs(s) > 1.0 - GIMBAL_TOL:
        raise GimbalLock(f"roll at +-90 deg (sin = {s:.12f}); pitch and yaw are not separable")
    theta = np.arctan2(-R[1, 2], R[2, 2])
    phi = np.arcsin(s)
    psi = np.arctan2(-R[0, 1], R[0, 0])
    return float(np.degrees(theta)), float(np.degrees(phi)), float(np.degrees(psi))


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``p -> R(q_R) p + q_T``; unit quaternion with ``w >= 0``."""

    q_R: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    q_T: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.asarray(self.q_R, dtype=float)
        if abs(np.linalg.norm(q) - 1.0) > 1e-12:
            q = q / np.linalg.norm(q)
        if q[0] < 0:
            q = -q
        object.__setattr__(self, "q_R", q)
        object.__setattr__(self, "q_T", np.asarray(self.q_T, dtype=float).reshape(3))

    @property
    def R(self) -> np.ndarray:
        return quat_to_matrix(self.q_R)

    def apply(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.R.T + self.q_T

    def inverse(self) -> "Pose":
        return Pose(quat_conjugate(self.q_R), -self.R.T @ self.q_T)

    def compose(self, other: "Pose") -> "Pose":
        """``self after other``."""
        return Pose(quat_multiply(self.q_R, other.q_R), self.R @ other.q_T + self.q_T)

    def to_xyzrpy(self) -> tuple[float, ...]:
        """``(x, y, z, theta, phi, psi)`` with translation in meters and angles in degrees."""
        return tuple(float(v) for v in self.q_T) + quat_to_rpy(self.q_R)

    @classmethod
    def from_xyzrpy(cls, x, y, z, theta_deg, phi_deg, psi_deg=0.0) -> "Pose":
        return cls(rpy_to_quat(theta_deg, phi_deg, psi_deg), np.array([x, y, z], dtype=float))
