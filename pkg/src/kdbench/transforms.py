"""Rigid-transform primitives shared by the kinematics and metric layers.

Conventions used throughout the package:

* rotations are 3x3 orthonormal matrices with determinant +1,
* translations are 3-vectors in meters,
* roll/pitch/yaw angles compose as ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``,
* rotation "logs" are axis-angle 3-vectors (axis scaled by angle, radians).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMALITY_TOL = 1e-9


def _as_vec3(value) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: rotation matrix plus translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", _as_vec3(self.translation))
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {self.rotation.shape}")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_rpy(translation, rpy) -> "Pose":
        return Pose(rpy_to_matrix(rpy), translation)

    def compose(self, other: "Pose") -> "Pose":
        """Return self @ other (apply ``other`` first in the local frame)."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def transform_point(self, point) -> np.ndarray:
        return self.rotation @ _as_vec3(point) + self.translation

    def is_orthonormal(self, tol: float = ORTHONORMALITY_TOL) -> bool:
        r = self.rotation
        if not np.all(np.isfinite(r)):
            return False
        if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
            return False
        return abs(np.linalg.det(r) - 1.0) <= tol


def rpy_to_matrix(rpy) -> np.ndarray:
    """Rotation matrix for roll/pitch/yaw angles, composed as Rz @ Ry @ Rx."""
    r, p, y = (float(a) for a in np.asarray(rpy, dtype=float).reshape(3))
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def matrix_to_rpy(rot: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rpy_to_matrix`; pitch is reported in [-pi/2, pi/2]."""
    rot = np.asarray(rot, dtype=float)
    sp = -rot[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = np.arcsin(sp)
    if abs(sp) < 1.0 - 1e-12:
        roll = np.arctan2(rot[2, 1], rot[2, 2])
        yaw = np.arctan2(rot[1, 0], rot[0, 0])
    else:
        # gimbal lock: only roll +/- yaw is observable, fold it all into roll
        roll = np.arctan2(-rot[1, 2], rot[1, 1])
        yaw = 0.0
    return np.array([roll, pitch, yaw])


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    ux, uy, uz = (float(a) for a in np.asarray(axis, dtype=float).reshape(3))
    c = np.cos(angle)
    s = np.sin(angle)
    one_c = 1.0 - c
    return np.array(
        [
            [c + ux * ux * one_c, ux * uy * one_c - uz * s, ux * uz * one_c + uy * s],
            [uy * ux * one_c + uz * s, c + uy * uy * one_c, uy * uz * one_c - ux * s],
            [uz * ux * one_c - uy * s, uz * uy * one_c + ux * s, c + uz * uz * one_c],
        ]
    )


def rotation_log(rot: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix.

    Handles the small-angle limit and the angle ~ pi branch, where the
    skew-symmetric part degenerates and the axis has to be recovered from
    the diagonal.
    """
    rot = np.asarray(rot, dtype=float)
    trace = rot[0, 0] + rot[1, 1] + rot[2, 2]
    cos_angle = min(1.0, max(-1.0, (trace - 1.0) / 2.0))
    angle = np.arccos(cos_angle)
    if angle < 1e-10:
        return np.zeros(3)
    if angle < np.pi - 1e-6:
        axis = np.array(
            [
                rot[2, 1] - rot[1, 2],
                rot[0, 2] - rot[2, 0],
                rot[1, 0] - rot[0, 1],
            ]
        ) / (2.0 * np.sin(angle))
        return angle * axis
    # angle near pi: R ~ 2 a a^T - I, so the axis is recovered from the
    # diagonal (magnitudes) and the symmetric off-diagonal part (signs).
    diag = np.clip((np.diag(rot) + 1.0) / 2.0, 0.0, None)
    k = int(np.argmax(diag))
    axis = np.empty(3)
    axis[k] = np.sqrt(diag[k])
    for j in range(3):
        if j != k:
            axis[j] = (rot[k, j] + rot[j, k]) / (4.0 * axis[k])
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        return np.zeros(3)
    return angle * axis / norm


def rotation_angle_between(rot_a: np.ndarray, rot_b: np.ndarray) -> float:
    """Geodesic angle between two rotations, in radians."""
    trace = float(np.trace(rot_a.T @ rot_b))
    cos_angle = min(1.0, max(-1.0, (trace - 1.0) / 2.0))
    return float(np.arccos(cos_angle))
