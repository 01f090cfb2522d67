"""Descriptor-indexed frame database and relative-pose registration.

A query frame is placed in the scene by retrieving its nearest database
frames by descriptor distance, asking a relative-pose provider how the query
camera sits relative to each neighbor, chaining the neighbor's stored pose
with that relative pose, and averaging the candidates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import geom
from .geom import Pose

# Provider contract: (query_frame_id, reference_frame_id) -> the query
# camera's pose expressed in the reference camera frame, i.e. the transform
# rel with compose(reference_scene_pose, rel) == query_scene_pose. A provider
# signals failure for a pair by returning None. provider(a, a) must be the
# identity pose.
RelativePoseProvider = Callable[[object, object], Optional[Pose]]


class RegistrationError(RuntimeError):
    pass


@dataclass(eq=False)
class FrameEntry:
    frame_id: object
    descriptor: np.ndarray
    pose: Pose

    def __post_init__(self):
        self.descriptor = np.asarray(self.descriptor, dtype=float).reshape(-1)
        if self.descriptor.size == 0:
            raise ValueError("descriptor must be non-empty")
        if not np.isfinite(self.descriptor).all():
            raise ValueError("descriptor contains non-finite values")


class FrameDatabase:
    """Immutable collection of frames with unique ids and uniform descriptors."""

    def __init__(self, entries: Sequence[FrameEntry]):
        entries = list(entries)
        ids = [e.frame_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("frame ids must be unique")
        dims = {e.descriptor.size for e in entries}
        if len(dims) > 1:
            raise ValueError("descriptors must share one length")
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def descriptor_dim(self) -> int:
        return self.entries[0].descriptor.size if self.entries else 0


def retrieve_neighbors(db: FrameDatabase, descriptor, k: int = 2) -> list[FrameEntry]:
    """k nearest entries by Euclidean descriptor distance.

    Distance ties resolve by ascending frame_id; k is clamped to the
    database size.
    """
    if len(db) == 0:
        raise ValueError("database is empty")
    if k <= 0:
        raise ValueError("k must be positive")
    q = np.asarray(descriptor, dtype=float).reshape(-1)
    if q.size != db.descriptor_dim:
        raise ValueError(f"descriptor length {q.size} != database dim {db.descriptor_dim}")
    ranked = sorted(db, key=lambda e: (float(np.linalg.norm(e.descriptor - q)), e.frame_id))
    return ranked[:min(k, len(db))]


@dataclass(eq=False)
class RegistrationResult:
    """Scene pose for the query plus neighbor agreement diagnostics.

    discrepancy is (translation gap in meters, rotation gap in radians)
    between the two neighbor candidates, (0, 0) when only one neighbor
    exists, and None when a provider failure left a single usable candidate.
    """

    pose: Pose
    neighbor_ids: list
    discrepancy: Optional[tuple[float, float]]


def register_frame(
    db: FrameDatabase,
    query_id,
    descriptor,
    provider: RelativePoseProvider,
) -> RegistrationResult:
    """Register a query frame against its two nearest database neighbors."""
    neighbors = retrieve_neighbors(db, descriptor, k=2)
    candidates = []
    for entry in neighbors:
        rel = provider(query_id, entry.frame_id)
        if rel is not None:
            candidates.append(geom.compose(entry.pose, rel))
    if not candidates:
        raise RegistrationError("registration failed")
    pose = geom.mean_pose(candidates)
    if len(neighbors) == 1:
        discrepancy = (0.0, 0.0)
    elif len(candidates) == 2:
        discrepancy = (
            float(np.linalg.norm(candidates[0].translation - candidates[1].translation)),
            geom.rotation_geodesic(candidates[0].rotation, candidates[1].rotation),
        )
    else:
        discrepancy = None  # partial provider failure: gap is unavailable
    return RegistrationResult(pose, [e.frame_id for e in neighbors], discrepancy)


def pose_to_json(pose: Pose) -> dict:
    return {
        "rotation": [float(v) for v in pose.rotation.reshape(-1)],
        "translation": [float(v) for v in pose.translation],
    }


def pose_from_json(obj: dict) -> Pose:
    rot = np.asarray(obj["rotation"], dtype=float)
    if rot.size != 9:
        raise ValueError("pose rotation must hold 9 row-major floats")
    return Pose(rot.reshape(3, 3), np.asarray(obj["translation"], dtype=float))


def save_database(db: FrameDatabase, path) -> None:
    payload = {
        "entries": [
            {
                "frame_id": e.frame_id,
                "descriptor": [float(v) for v in e.descriptor],
                "pose": pose_to_json(e.pose),
            }
            for e in db
        ]
    }
    Path(path).write_text(json.dumps(payload))


def load_database(path) -> FrameDatabase:
    try:
        payload = json.loads(Path(path).read_text())
        entries = [
            FrameEntry(item["frame_id"], item["descriptor"], pose_from_json(item["pose"]))
            for item in payload["entries"]
        ]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed frame database file: {exc}") from exc
    return FrameDatabase(entries)
