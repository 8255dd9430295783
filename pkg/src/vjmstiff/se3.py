"""Homogeneous transforms, the six-parameter spring transform and pose differencing.

Transforms are plain ``(4, 4)`` float arrays. A :class:`Pose` is the position and
orientation pulled out of such a matrix. Twists are 6-vectors
``(dx, dy, dz, dphi_x, dphi_y, dphi_z)`` with the rotational part expressed in the
base frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AXES = ("Tx", "Ty", "Tz", "Rx", "Ry", "Rz")
SPRING_AXES = AXES  # factor order of the 6-d.o.f. spring transform

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def axis_vector(kind: str) -> np.ndarray:
    """Unit vector of an elementary axis kind in its own frame."""
    u = np.zeros(3)
    u[_AXIS_INDEX[kind[1]]] = 1.0
    return u


def is_revolute(kind: str) -> bool:
    return kind[0] == "R"


def elementary(kind: str, value: float) -> np.ndarray:
    """Elementary homogeneous transform ``Tx..Tz`` (translation) or ``Rx..Rz`` (rotation)."""
    if kind not in AXES:
        raise ValueError(f"unknown elementary transform kind {kind!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value for {kind}: {value}")
    T = np.eye(4)
    i = _AXIS_INDEX[kind[1]]
    if kind[0] == "T":
        T[i, 3] = value
        return T
    c, s = np.cos(value), np.sin(value)
    j, k = (i + 1) % 3, (i + 2) % 3
    T[j, j] = c
    T[k, k] = c
    T[j, k] = -s
    T[k, j] = s
    return T


def right_multiply_elementary(T: np.ndarray, kind: str, value) -> None:
    """In-place ``T <- T @ elementary(kind, value)`` touching only the affected columns.

    ``T`` may be a stack of transforms ``(..., 4, 4)`` with one value per transform.
    """
    value = np.asarray(value, dtype=float)[..., None]
    i = _AXIS_INDEX[kind[1]]
    if kind[0] == "T":
        T[..., :, 3] += value * T[..., :, i]
        return
    c, s = np.cos(value), np.sin(value)
    j, k = (i + 1) % 3, (i + 2) % 3
    cj = T[..., :, j].copy()
    T[..., :, j] = c * cj + s * T[..., :, k]
    T[..., :, k] = c * T[..., :, k] - s * cj


def spring_transform(theta6) -> np.ndarray:
    """``Tx(t0) Ty(t1) Tz(t2) Rx(t3) Ry(t4) Rz(t5)`` for a 6-d.o.f. virtual spring."""
    theta6 = np.asarray(theta6, dtype=float)
    if theta6.shape != (6,):
        raise ValueError(f"spring transform needs 6 parameters, got shape {theta6.shape}")
    T = np.eye(4)
    for kind, value in zip(SPRING_AXES, theta6):
        T = T @ elementary(kind, value)
    return T


def make_transform(matrix) -> np.ndarray:
    """Build a transform from raw data, re-orthonormalizing the rotation block.

    This is the only place rotations are cleaned up; composition never does it.
    """
    M = np.asarray(matrix, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"transform must be 4x4, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("transform has non-finite entries")
    if not np.allclose(M[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError("transform bottom row must be (0, 0, 0, 1)")
    U, _, Vt = np.linalg.svd(M[:3, :3])
    R = U @ Vt
    if np.linalg.det(R) < 0:
        raise ValueError("rotation block is a reflection")
    if not np.allclose(R, M[:3, :3], atol=1e-6):
        raise ValueError("rotation block is not orthonormal")
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = M[:3, 3]
    return T


@dataclass(frozen=True)
class Pose:
    """End-effector location: position (m) and orientation matrix."""

    position: np.ndarray
    orientation: np.ndarray

    @classmethod
    def from_matrix(cls, T) -> "Pose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, 3].copy(), T[:3, :3].copy())

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.orientation
        T[:3, 3] = self.position
        return T

    def displaced(self, twist) -> "Pose":
        """Pose moved by a twist: translation added, rotation applied on the left."""
        twist = np.asarray(twist, dtype=float)
        return Pose(self.position + twist[:3], rotvec_to_matrix(twist[3:]) @ self.orientation)


def skew(v) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rotvec_to_matrix(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    angle = np.linalg.norm(w)
    W = skew(w)
    if angle < 1e-8:
        return np.eye(3) + W + 0.5 * W @ W
    return np.eye(3) + np.sin(angle) / angle * W + (1.0 - np.cos(angle)) / angle**2 * W @ W


def rotation_log(R) -> np.ndarray:
    """Axis-angle vector of a rotation with angle below pi."""
    R = np.asarray(R, dtype=float)
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = np.linalg.norm(w)
    c = 0.5 * (np.trace(R) - 1.0)
    angle = np.arctan2(s, c)
    if c <= -1.0 + 1e-9 or angle >= np.pi - 1e-6:
        raise ValueError("rotation too large for twist differencing")
    if s < 1e-8:
        return w * (1.0 + s * s / 6.0)
    return w * (angle / s)


def rotation_log_batch(R: np.ndarray) -> np.ndarray:
    """:func:`rotation_log` of a stack of rotations ``(K, 3, 3)``."""
    w = 0.5 * np.stack([R[:, 2, 1] - R[:, 1, 2], R[:, 0, 2] - R[:, 2, 0], R[:, 1, 0] - R[:, 0, 1]], axis=1)
    s = np.linalg.norm(w, axis=1)
    c = 0.5 * (np.trace(R, axis1=1, axis2=2) - 1.0)
    angle = np.arctan2(s, c)
    if np.any((c <= -1.0 + 1e-9) | (angle >= np.pi - 1e-6)):
        raise ValueError("rotation too large for twist differencing")
    small = s < 1e-8
    factor = np.where(small, 1.0 + s * s / 6.0, angle / np.where(small, 1.0, s))
    return w * factor[:, None]


def pose_diff(t2: Pose, t1: Pose) -> np.ndarray:
    """Twist taking ``t1`` to ``t2``: ``(p2 - p1, log(R2 R1^T))``."""
    out = np.empty(6)
    out[:3] = t2.position - t1.position
    out[3:] = rotation_log(t2.orientation @ t1.orientation.T)
    return out
