"""Ray grids and Fourier positional encodings for camera-token features.

Downstream token-stack configuration constants are recorded here for
reference: query token shape and the frame-count cap used when sampling
videos. Nothing in this module depends on them.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .geom import Intrinsics, Pose

DEFAULT_FOURIER_OCTAVES = 10
QUERY_TOKEN_COUNT = 32
QUERY_TOKEN_DIM = 768
MAX_VIDEO_FRAMES = 32

_MAGIC_HEADER = struct.Struct("<II")


@dataclass(frozen=True)
class FourierParams:
    """Octave count L for the sin/cos encoding; output dimension is 6L."""

    num_octaves: int = DEFAULT_FOURIER_OCTAVES

    def __post_init__(self):
        if self.num_octaves < 1:
            raise ValueError("num_octaves must be >= 1")

    @property
    def output_dim(self) -> int:
        return 6 * self.num_octaves


@dataclass(eq=False)
class RayGrid:
    """(H, W, 3) grid of camera-frame ray directions."""

    rays: np.ndarray

    def __post_init__(self):
        self.rays = np.asarray(self.rays, dtype=float)
        if self.rays.ndim != 3 or self.rays.shape[2] != 3:
            raise ValueError(f"rays must be (H, W, 3), got {self.rays.shape}")

    @property
    def height(self) -> int:
        return self.rays.shape[0]

    @property
    def width(self) -> int:
        return self.rays.shape[1]


@dataclass(eq=False)
class AffineProjection:
    """Affine map applied to encodings before fusing into features."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be 2-D (feature_dim, encoding_dim)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias length must match weight rows")

    @staticmethod
    def zeros(feature_dim: int, params: FourierParams) -> "AffineProjection":
        return AffineProjection(np.zeros((feature_dim, params.output_dim)), np.zeros(feature_dim))


def pixel_ray_grid(intr: Intrinsics, height: int, width: int) -> RayGrid:
    """Unit pixel-center rays on an arbitrary grid using the given pinhole.

    Matches geom.pixel_ray at every pixel when (height, width) equal the
    intrinsics' image size.
    """
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be >= 1")
    us = (np.arange(width) + 0.5 - intr.cx) / intr.fx
    vs = (np.arange(height) + 0.5 - intr.cy) / intr.fy
    rays = np.empty((height, width, 3))
    rays[:, :, 0] = us[None, :]
    rays[:, :, 1] = vs[:, None]
    rays[:, :, 2] = 1.0
    rays /= np.linalg.norm(rays, axis=2, keepdims=True)
    return RayGrid(rays)


def pool_ray_grid(grid: RayGrid, out_h: int, out_w: int, renormalize: bool = False) -> RayGrid:
    """Adaptive average pooling: cell (i, j) is the plain mean over the block
    rows [floor(i*H/H'), floor((i+1)*H/H')) x cols [floor(j*W/W'), ...).

    Pooled rays are not renormalized by default; pass renormalize=True to
    rescale each cell back to unit length.
    """
    h, w = grid.height, grid.width
    if not (1 <= out_h <= h and 1 <= out_w <= w):
        raise ValueError("pooled dimensions must satisfy 1 <= out <= in")
    row_starts = (np.arange(out_h) * h) // out_h
    col_starts = (np.arange(out_w) * w) // out_w
    row_counts = np.diff(np.r_[row_starts, h])
    col_counts = np.diff(np.r_[col_starts, w])
    pooled = np.add.reduceat(grid.rays, row_starts, axis=0) / row_counts[:, None, None]
    pooled = np.add.reduceat(pooled, col_starts, axis=1) / col_counts[None, :, None]
    if renormalize:
        norms = np.linalg.norm(pooled, axis=2, keepdims=True)
        if (norms <= 0).any():
            raise ValueError("cannot renormalize a zero pooled ray")
        pooled = pooled / norms
    return RayGrid(pooled)


def point_cloud_rays(pc: PointCloud, pose: Pose) -> tuple[np.ndarray, int]:
    """Unit rays from a camera to every cloud point, in camera coordinates.

    Points within 1e-9 of the camera origin are excluded; the second return
    value reports how many were dropped.
    """
    cam = (pc.points - pose.translation) @ pose.rotation
    norms = np.linalg.norm(cam, axis=1)
    keep = norms > 1e-9
    rays = cam[keep] / norms[keep, None]
    return rays, int((~keep).sum())


def fourier_encode(rays, params: FourierParams = FourierParams()) -> np.ndarray:
    """Multi-octave sin/cos encoding of ray components.

    For input (..., 3) the output is (..., 6L), laid out component-major:
    for each component c in (x, y, z) and octave l in [0, L), the pair
    (sin(2^l pi c), cos(2^l pi c)).
    """
    rays = np.asarray(rays, dtype=float)
    if rays.shape[-1] != 3:
        raise ValueError("rays must have a final dimension of 3")
    freqs = np.pi * (2.0 ** np.arange(params.num_octaves))
    scaled = rays[..., :, None] * freqs  # (..., 3, L)
    out = np.stack([np.sin(scaled), np.cos(scaled)], axis=-1)  # (..., 3, L, 2)
    return out.reshape(*rays.shape[:-1], params.output_dim)


def fuse_position(
    features: np.ndarray,
    rays: np.ndarray,
    params: FourierParams,
    proj: AffineProjection,
) -> np.ndarray:
    """Add the affinely projected ray encoding to each feature row."""
    features = np.asarray(features, dtype=float)
    rays = np.asarray(rays, dtype=float)
    if features.ndim != 2:
        raise ValueError("features must be (N, D)")
    if rays.shape != (features.shape[0], 3):
        raise ValueError("rays must be (N, 3) aligned with features")
    if proj.weights.shape != (features.shape[1], params.output_dim):
        raise ValueError(
            f"projection weights must be {(features.shape[1], params.output_dim)}, "
            f"got {proj.weights.shape}"
        )
    gamma = fourier_encode(rays, params)
    return features + gamma @ proj.weights.T + proj.bias


def write_features(path, features: np.ndarray) -> None:
    """Dump a feature matrix as little-endian float32 with an 8-byte header."""
    features = np.asarray(features)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    rows, dim = features.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC_HEADER.pack(rows, dim))
        fh.write(features.astype("<f4").tobytes())


def read_features(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _MAGIC_HEADER.size:
        raise ValueError("feature file too short for header")
    rows, dim = _MAGIC_HEADER.unpack_from(raw)
    expect = _MAGIC_HEADER.size + rows * dim * 4
    if len(raw) != expect:
        raise ValueError(f"feature file size {len(raw)} != expected {expect}")
    body = np.frombuffer(raw, dtype="<f4", offset=_MAGIC_HEADER.size)
    return body.reshape(rows, dim).astype(float)
