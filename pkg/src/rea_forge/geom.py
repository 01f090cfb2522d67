"""Rigid camera pose algebra and pinhole ray geometry.

Conventions: a pose is the camera-to-world map ``x_world = R @ x_cam + t``
with a right-handed orthonormal rotation; the camera frame is x right,
y down, z forward (optical axis).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ROTATION_TOL = 1e-9
_COMPOSE_DRIFT_TOL = 1e-12


def as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(eq=False)
class Pose:
    """Rigid transform mapping camera coordinates to world coordinates."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = as_vec3(self.translation)
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {self.rotation.shape}")
        if not (np.isfinite(self.rotation).all() and np.isfinite(self.translation).all()):
            raise ValueError("pose contains non-finite values")
        drift = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if drift > ROTATION_TOL:
            raise ValueError(f"rotation not orthonormal (max deviation {drift:.3e})")
        if abs(np.linalg.det(self.rotation) - 1.0) > ROTATION_TOL:
            raise ValueError("rotation determinant must be +1")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole camera model; principal point in pixel units, origin top-left."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


def compose(a: Pose, b: Pose) -> Pose:
    """Pose applying ``b`` first and ``a`` second (matrix product a @ b)."""
    rot = a.rotation @ b.rotation
    # long compose chains accumulate drift; polar-project when it shows
    if np.abs(rot.T @ rot - np.eye(3)).max() > _COMPOSE_DRIFT_TOL:
        u, _, vt = np.linalg.svd(rot)
        rot = u @ vt
    return Pose(rot, a.rotation @ b.translation + a.translation)


def inverse(p: Pose) -> Pose:
    return Pose(p.rotation.T, -(p.rotation.T @ p.translation))


def camera_to_world(p: Pose, point) -> np.ndarray:
    return p.rotation @ as_vec3(point) + p.translation


def world_to_camera(p: Pose, point) -> np.ndarray:
    """Express a world point in the camera frame: R^T (p - t)."""
    return p.rotation.T @ (as_vec3(point) - p.translation)


def pixel_ray(intr: Intrinsics, u: float, v: float) -> np.ndarray:
    """Unit camera-frame ray through the center of pixel (u, v).

    The pixel-center convention adds 0.5 to each coordinate before applying
    the inverse pinhole map, so integer (u, v) address whole pixels.
    """
    if not (0 <= u < intr.width and 0 <= v < intr.height):
        raise ValueError(f"pixel ({u}, {v}) outside {intr.width}x{intr.height} image")
    d = np.array([(u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0])
    return d / np.linalg.norm(d)


def quat_from_rotation(R) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, branch-stable."""
    R = np.asarray(R, dtype=float)
    t = R[0, 0] + R[1, 1] + R[2, 2]
    if t > 0:
        s = 2.0 * np.sqrt(t + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = np.asarray(q)
    return q / np.linalg.norm(q)


def rotation_from_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotation_geodesic(a, b) -> float:
    """Geodesic angle in radians between two rotation matrices.

    Computed as atan2 of the relative rotation's sine (from the skew part)
    and cosine (from the trace), which stays accurate near 0 and pi where
    the arccos form loses half the significant digits.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.T @ b
    cos = 0.5 * (m[0, 0] + m[1, 1] + m[2, 2] - 1.0)
    sin = 0.5 * np.linalg.norm(
        [m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    return float(np.arctan2(sin, cos))


def mean_pose(poses: Sequence[Pose]) -> Pose:
    """Chordal mean pose: translation mean plus sign-aligned quaternion mean.

    Quaternions are sign-aligned to the first pose before averaging and the
    result is renormalized. Sums run in input-index order (numpy pairwise
    reduction), making repeated calls on the same sequence bit-reproducible.
    """
    if len(poses) == 0:
        raise ValueError("no poses in interval")
    ts = np.stack([p.translation for p in poses])
    quats = np.stack([quat_from_rotation(p.rotation) for p in poses])
    signs = np.where(quats @ quats[0] < 0.0, -1.0, 1.0)
    q = (quats * signs[:, None]).mean(axis=0)
    norm = np.linalg.norm(q)
    if norm < 1e-12:
        raise ValueError("rotation mean is degenerate for these poses")
    return Pose(rotation_from_quat(q / norm), ts.mean(axis=0))
