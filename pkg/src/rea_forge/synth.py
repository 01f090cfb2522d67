"""Synthetic indoor scenes: labeled point cloud, agent track, scripted actions.

A scene is a rectangular room (z up, floor at z=0) with furniture patches
mounted on the walls and one small item centered on each furniture piece.
The agent walks between furniture at eye height, dwelling 3 to 5 seconds per
visit; each dwell becomes one action touching that furniture's item. Scene
generation is a pure function of its config, so equal seeds give equal
scenes byte for byte.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cloud import Mask2D, PointCloud, read_ply, write_ply
from .geom import Intrinsics, Pose, quat_from_rotation
from .qagen import ActionInterval
from .register import FrameDatabase, FrameEntry, pose_from_json, pose_to_json
from .selection import select_representatives

EYE_HEIGHT = 1.5
TRACK_HZ = 10.0
KEYFRAME_COUNT = 25
ITEM_PATCH_HALF = 0.08
ITEM_DENSITY_BOOST = 4.0
_UP = np.array([0.0, 0.0, 1.0])

FURNITURE_NAMES = ("counter", "sink", "stove", "shelf", "cabinet", "table",
                   "dresser", "workbench")
ITEM_NAMES = ("cup", "plate", "kettle", "bowl", "jar", "tray", "pan", "jug")
PLACEMENT_VERB = "put down"
OTHER_VERBS = ("pick up", "wash", "move", "wipe")

DEFAULT_INTRINSICS = Intrinsics(fx=110.0, fy=110.0, cx=64.0, cy=64.0,
                                width=128, height=128)


@dataclass(frozen=True)
class SynthConfig:
    room_width: float = 6.0
    room_depth: float = 5.0
    wall_height: float = 2.5
    furniture_count: int = 6
    action_count: int = 24
    walk_speed: float = 0.9
    point_density: float = 400.0
    seed: int = 0

    def __post_init__(self):
        if self.room_width < 3.0 or self.room_depth < 3.0:
            raise ValueError("room sides must be at least 3 m")
        if self.wall_height < 2.0:
            raise ValueError("wall height must be at least 2 m")
        if not 2 <= self.furniture_count <= len(FURNITURE_NAMES):
            raise ValueError(
                f"furniture_count must be in [2, {len(FURNITURE_NAMES)}]")
        if self.action_count < 3:
            raise ValueError("action_count must be at least 3")
        if self.walk_speed <= 0:
            raise ValueError("walk_speed must be positive")
        if self.point_density <= 0:
            raise ValueError("point_density must be positive")

    def to_dict(self) -> dict:
        return {
            "room_width": self.room_width,
            "room_depth": self.room_depth,
            "wall_height": self.wall_height,
            "furniture_count": self.furniture_count,
            "action_count": self.action_count,
            "walk_speed": self.walk_speed,
            "point_density": self.point_density,
            "seed": self.seed,
        }


@dataclass
class SceneObject:
    object_id: str
    name: str
    position: np.ndarray
    is_furniture: bool

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)


@dataclass
class _Wall:
    origin: np.ndarray
    along: np.ndarray
    normal: np.ndarray
    length: float


@dataclass
class _Furnishing:
    wall: int
    s_center: float
    width: float
    z0: float
    z1: float
    item_s: float
    item_z: float
    stand_distance: float


def _room_walls(cfg: SynthConfig) -> list:
    w, d = cfg.room_width, cfg.room_depth
    ex, ey = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    return [
        _Wall(np.zeros(3), ex, ey, w),
        _Wall(np.array([w, 0.0, 0.0]), ey, -ex, d),
        _Wall(np.array([w, d, 0.0]), -ex, -ey, w),
        _Wall(np.array([0.0, d, 0.0]), -ey, ex, d),
    ]


def _wall_point(wall: _Wall, s: float, z: float) -> np.ndarray:
    return wall.origin + s * wall.along + z * _UP


def _place_furniture(cfg: SynthConfig, walls, rng) -> list:
    placed = []
    for _ in range(cfg.furniture_count):
        for _attempt in range(500):
            wi = int(rng.integers(len(walls)))
            width = float(rng.uniform(0.7, 1.1))
            margin = 0.5 + width / 2
            if walls[wi].length < 2 * margin:
                continue
            s = float(rng.uniform(margin, walls[wi].length - margin))
            z0 = float(rng.uniform(0.8, 1.1))
            z1 = z0 + float(rng.uniform(0.5, 0.8))
            anchor = _wall_point(walls[wi], s, (z0 + z1) / 2)
            ok = True
            for other in placed:
                other_anchor = _wall_point(walls[other.wall], other.s_center,
                                           (other.z0 + other.z1) / 2)
                if np.linalg.norm(anchor - other_anchor) < 0.5:
                    ok = False
                    break
                if other.wall == wi and \
                        abs(s - other.s_center) < (width + other.width) / 2 + 0.15:
                    ok = False
                    break
            if not ok:
                continue
            max_offset = min(0.25, width / 2 - ITEM_PATCH_HALF - 0.02)
            offset = float(rng.uniform(0.12, max_offset)) * (1 if rng.random() < 0.5 else -1)
            item_z = float(rng.uniform(z0 + ITEM_PATCH_HALF + 0.02,
                                       z1 - ITEM_PATCH_HALF - 0.02))
            stand = float(rng.uniform(0.9, 1.3))
            placed.append(_Furnishing(wi, s, width, z0, z1, s + offset, item_z, stand))
            break
        else:
            raise ValueError("could not place furniture; relax room or count")
    return placed


def _sample_rect(rng, count, s_lo, s_hi, z_lo, z_hi):
    s = rng.uniform(s_lo, s_hi, count)
    z = rng.uniform(z_lo, z_hi, count)
    return s, z


def _surface_points(cfg: SynthConfig, walls, furnishings, rng):
    """Uniform surface samples with punched holes: walls lose furniture
    rectangles, furniture loses its item patch, items sample 4x denser."""
    chunks, labels, colors = [], [], []

    def add(points, label, base, jitter_rng):
        chunks.append(points)
        labels.append(np.full(len(points), label, dtype=np.int64))
        noise = jitter_rng.uniform(-0.03, 0.03, (len(points), 3))
        colors.append(np.clip(base + noise, 0.0, 1.0))

    floor_n = int(round(cfg.room_width * cfg.room_depth * cfg.point_density))
    fx = rng.uniform(0, cfg.room_width, floor_n)
    fy = rng.uniform(0, cfg.room_depth, floor_n)
    add(np.column_stack([fx, fy, np.zeros(floor_n)]), -1,
        np.array([0.55, 0.5, 0.45]), rng)

    for wi, wall in enumerate(walls):
        n = int(round(wall.length * cfg.wall_height * cfg.point_density))
        s, z = _sample_rect(rng, n, 0, wall.length, 0, cfg.wall_height)
        keep = np.ones(n, dtype=bool)
        for f in furnishings:
            if f.wall != wi:
                continue
            inside = (np.abs(s - f.s_center) <= f.width / 2) & (z >= f.z0) & (z <= f.z1)
            keep &= ~inside
        pts = wall.origin + s[keep, None] * wall.along + z[keep, None] * _UP
        add(pts, -1, np.array([0.85, 0.84, 0.8]), rng)

    for fi, f in enumerate(furnishings):
        wall = walls[f.wall]
        area = f.width * (f.z1 - f.z0)
        n = int(round(area * cfg.point_density))
        s, z = _sample_rect(rng, n, f.s_center - f.width / 2, f.s_center + f.width / 2,
                            f.z0, f.z1)
        hole = (np.abs(s - f.item_s) <= ITEM_PATCH_HALF) & \
               (np.abs(z - f.item_z) <= ITEM_PATCH_HALF)
        s, z = s[~hole], z[~hole]
        pts = wall.origin + s[:, None] * wall.along + z[:, None] * _UP
        add(pts, fi, rng.uniform(0.2, 0.8, 3), rng)

    item_base = len(furnishings)
    for fi, f in enumerate(furnishings):
        wall = walls[f.wall]
        n = int(round((2 * ITEM_PATCH_HALF) ** 2
                      * cfg.point_density * ITEM_DENSITY_BOOST))
        s, z = _sample_rect(rng, n, f.item_s - ITEM_PATCH_HALF,
                            f.item_s + ITEM_PATCH_HALF,
                            f.item_z - ITEM_PATCH_HALF, f.item_z + ITEM_PATCH_HALF)
        pts = wall.origin + s[:, None] * wall.along + z[:, None] * _UP
        add(pts, item_base + fi, rng.uniform(0.2, 0.8, 3), rng)

    points = np.vstack(chunks)
    return (PointCloud(points, np.vstack(colors)), np.concatenate(labels))


def _aim_pose(eye, forward) -> Pose:
    f = np.asarray(forward, dtype=float)
    norm = np.linalg.norm(f)
    if norm < 1e-12:
        raise ValueError("degenerate view direction")
    f = f / norm
    r = np.cross(f, _UP)
    r_norm = np.linalg.norm(r)
    if r_norm < 1e-9:
        raise ValueError("view direction too close to vertical")
    r = r / r_norm
    d = np.cross(f, r)
    return Pose(np.column_stack([r, d, f]), np.asarray(eye, dtype=float))


def _look_at(eye, target) -> Pose:
    return _aim_pose(eye, np.asarray(target, dtype=float) - np.asarray(eye, dtype=float))


@dataclass
class _Segment:
    t0: float
    t1: float
    kind: str
    start: np.ndarray
    end: np.ndarray
    target: np.ndarray | None = None


def _build_timeline(cfg: SynthConfig, walls, furnishings, item_centers, rng):
    """Random furniture visit order (no revisit within a window of 2),
    walk legs at constant speed, one dwell action per visit."""
    count = len(furnishings)
    window = min(2, count - 1)
    visits = []
    for _ in range(cfg.action_count):
        recent = set(visits[-window:]) if window else set()
        choices = [i for i in range(count) if i not in recent]
        visits.append(int(choices[int(rng.integers(len(choices)))]))

    stands = []
    for f in furnishings:
        anchor = _wall_point(walls[f.wall], f.s_center, 0.0)
        stand = anchor + f.stand_distance * walls[f.wall].normal
        stands.append(np.array([stand[0], stand[1], EYE_HEIGHT]))

    segments = []
    actions = []
    cursor = np.array([cfg.room_width / 2, cfg.room_depth / 2, EYE_HEIGHT])
    t = 0.0
    for visit_index, fi in enumerate(visits):
        stand = stands[fi]
        dist = float(np.linalg.norm(stand - cursor))
        if dist > 1e-9:
            duration = dist / cfg.walk_speed
            segments.append(_Segment(t, t + duration, "walk", cursor, stand))
            t += duration
        dwell = float(rng.uniform(3.2, 4.8))
        segments.append(_Segment(t, t + dwell, "dwell", stand, stand,
                                 target=item_centers[fi]))
        verb = PLACEMENT_VERB if rng.random() < 0.45 else \
            OTHER_VERBS[int(rng.integers(len(OTHER_VERBS)))]
        actions.append((visit_index, fi, verb, t, t + dwell))
        t += dwell
        cursor = stand
    return segments, actions, t


def _pose_at(segments, t: float) -> Pose:
    # dwells win boundary ties so interval slices hold steady poses
    hit = None
    for seg in segments:
        if seg.t0 - 1e-9 <= t <= seg.t1 + 1e-9:
            if seg.kind == "dwell":
                hit = seg
                break
            if hit is None:
                hit = seg
    if hit is None:
        raise ValueError(f"time {t} outside timeline")
    if hit.kind == "dwell":
        return _look_at(hit.start, hit.target)
    alpha = (t - hit.t0) / (hit.t1 - hit.t0)
    position = hit.start + alpha * (hit.end - hit.start)
    return _aim_pose(position, hit.end - hit.start)


@dataclass
class SceneModel:
    scene_id: str
    config: SynthConfig
    intrinsics: Intrinsics
    point_cloud: PointCloud
    point_object_ids: np.ndarray
    objects: list
    agent_track: list
    actions: list
    frame_db: FrameDatabase
    _object_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.point_object_ids = np.asarray(self.point_object_ids, dtype=np.int64)
        if len(self.point_object_ids) != len(self.point_cloud):
            raise ValueError("one object label per point required")
        self._object_index = {o.object_id: i for i, o in enumerate(self.objects)}
        if len(self._object_index) != len(self.objects):
            raise ValueError("object ids must be unique")
        self.validate()

    @property
    def objects_by_id(self) -> dict:
        return {o.object_id: o for o in self.objects}

    @property
    def duration(self) -> float:
        return self.agent_track[-1][0] - self.agent_track[0][0]

    def validate(self) -> None:
        times = [t for t, _ in self.agent_track]
        if len(times) < 2:
            raise ValueError("agent track needs at least two samples")
        if not all(a < b for a, b in zip(times, times[1:])):
            raise ValueError("track timestamps must strictly increase")
        if self.point_object_ids.max(initial=-1) >= len(self.objects):
            raise ValueError("point label out of range")
        ids = [a.action_id for a in self.actions]
        if len(set(ids)) != len(ids):
            raise ValueError("action ids must be unique")
        for action in self.actions:
            for ref in action.object_refs:
                if ref not in self._object_index:
                    raise ValueError(f"action references unknown object {ref!r}")
            if action.start_time < times[0] - 1e-9 or action.end_time > times[-1] + 1e-9:
                raise ValueError("action interval outside track")

    def render_object_mask(self, object_id: str, pose: Pose) -> Mask2D:
        """Ground-truth pixel mask of one object's points from a camera pose."""
        if object_id not in self._object_index:
            raise ValueError(f"unknown object {object_id!r}")
        index = self._object_index[object_id]
        pts = self.point_cloud.points[self.point_object_ids == index]
        cam = (pts - pose.translation) @ pose.rotation
        intr = self.intrinsics
        front = cam[:, 2] > 0
        cam = cam[front]
        px = np.rint(intr.fx * cam[:, 0] / cam[:, 2] + intr.cx - 0.5).astype(int)
        py = np.rint(intr.fy * cam[:, 1] / cam[:, 2] + intr.cy - 0.5).astype(int)
        ok = (px >= 0) & (px < intr.width) & (py >= 0) & (py < intr.height)
        return Mask2D.from_pixels(intr.width, intr.height, px[ok], py[ok])


def _build_frame_db(track, seed: int) -> FrameDatabase:
    frames = [(i, pose) for i, (_, pose) in enumerate(track)]
    result = select_representatives(frames, k=KEYFRAME_COUNT, seed=seed)
    entries = []
    for index in sorted(result.representative_ids):
        pose = track[index][1]
        quat = quat_from_rotation(pose.rotation)
        if quat[0] < 0:
            quat = -quat
        descriptor = np.concatenate([pose.translation, quat])
        entries.append(FrameEntry(f"kf-{index:05d}", descriptor, pose))
    return FrameDatabase(entries)


def generate_scene(cfg: SynthConfig | None = None) -> SceneModel:
    """Build a deterministic scene from the config seed."""
    cfg = SynthConfig() if cfg is None else cfg
    rng = np.random.default_rng(cfg.seed)
    walls = _room_walls(cfg)
    furnishings = _place_furniture(cfg, walls, rng)

    objects = []
    for fi, f in enumerate(furnishings):
        anchor = _wall_point(walls[f.wall], f.s_center, (f.z0 + f.z1) / 2)
        objects.append(SceneObject(f"furn-{fi:02d}", FURNITURE_NAMES[fi], anchor, True))
    item_centers = []
    for fi, f in enumerate(furnishings):
        center = _wall_point(walls[f.wall], f.item_s, f.item_z)
        item_centers.append(center)
        objects.append(SceneObject(f"item-{fi:02d}", ITEM_NAMES[fi], center, False))

    point_cloud, labels = _surface_points(cfg, walls, furnishings, rng)
    segments, raw_actions, total = _build_timeline(cfg, walls, furnishings,
                                                   item_centers, rng)

    steps = int(np.floor(total * TRACK_HZ)) + 1
    track = [(k / TRACK_HZ, _pose_at(segments, k / TRACK_HZ)) for k in range(steps)]
    if track[-1][0] < total - 1e-9:
        # close the track exactly at the final dwell's end
        track.append((total, _pose_at(segments, total)))

    actions = []
    for visit_index, fi, verb, start, end in raw_actions:
        item = objects[len(furnishings) + fi]
        actions.append(ActionInterval(
            action_id=f"act-{visit_index:03d}",
            label=f"{verb} {item.name}",
            start_time=start,
            end_time=end,
            object_refs=[item.object_id],
        ))

    return SceneModel(
        scene_id=f"scene-{cfg.seed:04d}",
        config=cfg,
        intrinsics=DEFAULT_INTRINSICS,
        point_cloud=point_cloud,
        point_object_ids=labels,
        objects=objects,
        agent_track=track,
        actions=actions,
        frame_db=_build_frame_db(track, cfg.seed),
    )


def save_scene(scene: SceneModel, path) -> Path:
    """Write scene JSON plus a sibling .ply holding the point cloud."""
    path = Path(path)
    ply_path = path.with_suffix(".ply")
    write_ply(scene.point_cloud, ply_path, binary=True)
    intr = scene.intrinsics
    payload = {
        "scene_id": scene.scene_id,
        "config": scene.config.to_dict(),
        "intrinsics": {"fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
                       "width": intr.width, "height": intr.height},
        "objects": [
            {"object_id": o.object_id, "name": o.name,
             "position": [float(v) for v in o.position],
             "is_furniture": o.is_furniture}
            for o in scene.objects
        ],
        "agent_track": [
            {"time": t, "pose": pose_to_json(pose)} for t, pose in scene.agent_track
        ],
        "actions": [
            {"action_id": a.action_id, "label": a.label,
             "start_time": a.start_time, "end_time": a.end_time,
             "object_refs": list(a.object_refs)}
            for a in scene.actions
        ],
        "frame_db": {
            "entries": [
                {"frame_id": e.frame_id,
                 "descriptor": [float(v) for v in e.descriptor],
                 "pose": pose_to_json(e.pose)}
                for e in scene.frame_db
            ]
        },
        "point_object_ids": [int(v) for v in scene.point_object_ids],
        "point_cloud_file": ply_path.name,
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def load_scene(path) -> SceneModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        cfg = SynthConfig(**payload["config"])
        intr = payload["intrinsics"]
        intrinsics = Intrinsics(fx=intr["fx"], fy=intr["fy"], cx=intr["cx"],
                                cy=intr["cy"], width=intr["width"],
                                height=intr["height"])
        objects = [
            SceneObject(o["object_id"], o["name"], o["position"], o["is_furniture"])
            for o in payload["objects"]
        ]
        track = [(float(e["time"]), pose_from_json(e["pose"]))
                 for e in payload["agent_track"]]
        actions = [
            ActionInterval(a["action_id"], a["label"], float(a["start_time"]),
                           float(a["end_time"]), list(a["object_refs"]))
            for a in payload["actions"]
        ]
        entries = [
            FrameEntry(e["frame_id"], e["descriptor"], pose_from_json(e["pose"]))
            for e in payload["frame_db"]["entries"]
        ]
        labels = np.asarray(payload["point_object_ids"], dtype=np.int64)
        cloud = read_ply(path.parent / payload["point_cloud_file"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed scene file: {exc}") from exc
    return SceneModel(
        scene_id=payload["scene_id"],
        config=cfg,
        intrinsics=intrinsics,
        point_cloud=cloud,
        point_object_ids=labels,
        objects=objects,
        agent_track=track,
        actions=actions,
        frame_db=FrameDatabase(entries),
    )
