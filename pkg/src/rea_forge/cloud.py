"""Colored point clouds: voxel downsampling, mask localization, PLY I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geom import Intrinsics, Pose

DEFAULT_VOXEL_SIZE = 0.06

_PLY_DTYPES = {
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
    "uchar": "u1", "uint8": "u1",
    "char": "i1", "int8": "i1",
    "ushort": "<u2", "uint16": "<u2",
    "short": "<i2", "int16": "<i2",
    "uint": "<u4", "uint32": "<u4",
    "int": "<i4", "int32": "<i4",
}


class PlyError(ValueError):
    """Base for PLY parsing failures."""


class PlyHeaderError(PlyError):
    """Malformed or unsupported PLY header."""


class PlyMissingPropertyError(PlyError):
    """Vertex element lacks a required property."""


class PlyPayloadError(PlyError):
    """Truncated or corrupt PLY payload."""


@dataclass(eq=False)
class PointCloud:
    """Points (N, 3) in meters with per-point RGB colors in [0, 1]."""

    points: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=float).reshape(-1, 3)
        if self.colors.shape != self.points.shape:
            raise ValueError("colors must match points one-to-one")
        if not np.isfinite(self.points).all():
            raise ValueError("points contain non-finite values")
        if self.colors.size and (self.colors.min() < 0.0 or self.colors.max() > 1.0):
            raise ValueError("colors must lie in [0, 1]")

    def __len__(self) -> int:
        return self.points.shape[0]

    @staticmethod
    def empty() -> "PointCloud":
        return PointCloud(np.zeros((0, 3)), np.zeros((0, 3)))


@dataclass(eq=False)
class Mask2D:
    """Dense binary pixel mask with image dimensions."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.height, self.width):
            raise ValueError(f"mask bits must be (height, width)={self.height, self.width}")

    @classmethod
    def from_pixels(cls, width: int, height: int, px, py) -> "Mask2D":
        bits = np.zeros((height, width), dtype=bool)
        bits[np.asarray(py, dtype=int), np.asarray(px, dtype=int)] = True
        return cls(width, height, bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def voxel_downsample(pc: PointCloud, voxel_size: float = DEFAULT_VOXEL_SIZE) -> PointCloud:
    """Collapse points sharing a voxel key floor(p / voxel) to their centroid.

    Output points are ordered by ascending lexicographic voxel key, so the
    result is a pure function of the input point set.
    """
    if voxel_size <= 0:
        raise ValueError("voxel size must be positive")
    if len(pc) == 0:
        return PointCloud.empty()
    keys = np.floor(pc.points / voxel_size).astype(np.int64)
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    keys = keys[order]
    pts = pc.points[order]
    cols = pc.colors[order]
    boundary = np.any(keys[1:] != keys[:-1], axis=1)
    starts = np.r_[0, np.nonzero(boundary)[0] + 1]
    counts = np.diff(np.r_[starts, len(pts)])[:, None]
    return PointCloud(
        np.add.reduceat(pts, starts, axis=0) / counts,
        np.add.reduceat(cols, starts, axis=0) / counts,
    )


def localize_object(
    pc: PointCloud,
    mask: Mask2D,
    intr: Intrinsics,
    pose: Pose,
    trim_mad: float | None = None,
) -> tuple[np.ndarray, int]:
    """Mean world position of cloud points that project inside a 2D mask.

    A point is kept when its camera-frame depth is positive and its projected
    pixel (nearest integer of (u, v) - 0.5, the pixel-center inverse) falls on
    a set mask bit. Returns the arithmetic mean of kept world points and the
    kept count. With ``trim_mad`` set, points farther than trim_mad * MAD from
    the coordinate-wise median are dropped before averaging.

    Args:
        pc: scene point cloud in world coordinates.
        mask: object mask; dimensions must match the intrinsics.
        intr: pinhole model of the query frame.
        pose: camera-to-world pose of the query frame.
        trim_mad: optional robust-trim factor, default off.
    """
    if (mask.width, mask.height) != (intr.width, intr.height):
        raise ValueError("mask dimensions must match camera intrinsics")
    if len(pc) == 0:
        raise ValueError("object not visible in frame")
    cam = (pc.points - pose.translation) @ pose.rotation
    z = cam[:, 2]
    front = z > 0
    idx = np.nonzero(front)[0]
    if idx.size:
        u = intr.fx * cam[idx, 0] / z[idx] + intr.cx
        v = intr.fy * cam[idx, 1] / z[idx] + intr.cy
        px = np.rint(u - 0.5).astype(np.int64)
        py = np.rint(v - 0.5).astype(np.int64)
        inside = (px >= 0) & (px < intr.width) & (py >= 0) & (py < intr.height)
        idx = idx[inside]
        px, py = px[inside], py[inside]
        idx = idx[mask.bits[py, px]]
    if idx.size == 0:
        raise ValueError("object not visible in frame")
    kept = pc.points[idx]
    if trim_mad is not None and len(kept) >= 3:
        center = np.median(kept, axis=0)
        dist = np.linalg.norm(kept - center, axis=1)
        mad = np.median(np.abs(dist - np.median(dist)))
        if mad > 0:
            kept = kept[dist <= np.median(dist) + trim_mad * mad]
    return kept.mean(axis=0), int(len(kept))


def write_ply(pc: PointCloud, path, binary: bool = True) -> None:
    """Write x/y/z float32 and red/green/blue uchar vertices."""
    path = Path(path)
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        "ply\n"
        f"format {fmt} 1.0\n"
        f"element vertex {len(pc)}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    )
    pts = pc.points.astype("<f4")
    cols = np.rint(pc.colors * 255.0).astype("u1")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            rec = np.empty(len(pc), dtype=_vertex_dtype())
            for i, name in enumerate(("x", "y", "z")):
                rec[name] = pts[:, i]
            for i, name in enumerate(("red", "green", "blue")):
                rec[name] = cols[:, i]
            fh.write(rec.tobytes())
        else:
            lines = []
            for p, c in zip(pts, cols):
                coords = " ".join(f"{float(v):.9g}" for v in p)
                lines.append(f"{coords} {c[0]} {c[1]} {c[2]}\n")
            fh.write("".join(lines).encode("ascii"))


def _vertex_dtype(props=None):
    if props is None:
        props = [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                 ("red", "u1"), ("green", "u1"), ("blue", "u1")]
    return np.dtype(props)


def _parse_header(raw: bytes):
    end = raw.find(b"end_header\n")
    if end < 0:
        raise PlyHeaderError("no end_header line")
    try:
        lines = raw[:end].decode("ascii").splitlines()
    except UnicodeDecodeError as exc:
        raise PlyHeaderError("header is not ascii") from exc
    lines = [ln.strip() for ln in lines if ln.strip() and not ln.startswith("comment")]
    if not lines or lines[0] != "ply":
        raise PlyHeaderError("missing ply magic")
    if len(lines) < 2 or not lines[1].startswith("format "):
        raise PlyHeaderError("missing format line")
    fmt_tokens = lines[1].split()
    if len(fmt_tokens) != 3 or fmt_tokens[1] not in ("ascii", "binary_little_endian"):
        raise PlyHeaderError(f"unsupported format: {lines[1]!r}")
    binary = fmt_tokens[1] == "binary_little_endian"

    count = None
    props: list[tuple[str, str]] = []
    for ln in lines[2:]:
        tokens = ln.split()
        if tokens[0] == "element":
            if count is not None:
                break  # only the leading vertex element is read
            if len(tokens) != 3 or tokens[1] != "vertex":
                raise PlyHeaderError("first element must be vertex")
            try:
                count = int(tokens[2])
            except ValueError as exc:
                raise PlyHeaderError("bad vertex count") from exc
            if count < 0:
                raise PlyHeaderError("bad vertex count")
        elif tokens[0] == "property":
            if count is None:
                continue
            if tokens[1] == "list":
                raise PlyHeaderError("list properties unsupported on vertices")
            if len(tokens) != 3 or tokens[1] not in _PLY_DTYPES:
                raise PlyHeaderError(f"unsupported property: {ln!r}")
            props.append((tokens[2], _PLY_DTYPES[tokens[1]]))
        elif tokens[0] in ("obj_info",):
            continue
        else:
            raise PlyHeaderError(f"unexpected header line: {ln!r}")
    if count is None:
        raise PlyHeaderError("no vertex element")
    for name in ("x", "y", "z", "red", "green", "blue"):
        if name not in [p[0] for p in props]:
            raise PlyMissingPropertyError(f"missing property '{name}'")
    return binary, count, props, end + len(b"end_header\n")


def read_ply(path) -> PointCloud:
    """Read a PLY vertex cloud (ascii or binary little-endian).

    Raises PlyHeaderError, PlyMissingPropertyError, or PlyPayloadError for
    malformed headers, absent x/y/z/red/green/blue, or short payloads.
    """
    raw = Path(path).read_bytes()
    binary, count, props, offset = _parse_header(raw)
    if binary:
        dtype = _vertex_dtype(props)
        need = count * dtype.itemsize
        if len(raw) - offset < need:
            raise PlyPayloadError(f"truncated payload: need {need} bytes, have {len(raw) - offset}")
        rec = np.frombuffer(raw[offset:offset + need], dtype=dtype)
    else:
        text = raw[offset:].decode("ascii", errors="replace").splitlines()
        rows = [ln.split() for ln in text if ln.strip()]
        if len(rows) < count:
            raise PlyPayloadError(f"truncated payload: need {count} rows, have {len(rows)}")
        rec = np.zeros(count, dtype=_vertex_dtype(props))
        names = [p[0] for p in props]
        for i in range(count):
            if len(rows[i]) < len(props):
                raise PlyPayloadError(f"truncated payload at row {i}")
            for name, token in zip(names, rows[i]):
                try:
                    rec[name][i] = float(token)
                except ValueError as exc:
                    raise PlyPayloadError(f"corrupt payload at row {i}: {token!r}") from exc
    pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(float)
    cols = np.stack([rec["red"], rec["green"], rec["blue"]], axis=1).astype(float) / 255.0
    return PointCloud(pts, cols)
