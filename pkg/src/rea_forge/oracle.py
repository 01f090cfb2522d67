"""Independent recomputation of relation payloads for dataset audits.

Every quantity is re-derived along a different code path than generation:
4x4 homogeneous matrices instead of rotation/translation pairs, explicit
comparison-based sectors instead of atan2, a closed-form regression slope,
and a separate mask/localization routine. Only the Pose container and the
rotation-averaging primitive are shared. A clean record recomputes to the
same payload; compare_payloads reports every field that does not.
"""
from __future__ import annotations

import math

import numpy as np

from .geom import Pose, mean_pose

_HAND_DEADZONE = 1e-9
_EPS = 1e-9

_INSTRUCTION = {
    "front": "move forward",
    "back": "move backward",
    "left": "move left",
    "right": "move right",
}
_STAY = "stay where you are"


class OracleError(ValueError):
    """Record is structurally unusable for recomputation."""


def _hom(pose: Pose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = pose.rotation
    m[:3, 3] = pose.translation
    return m


def _to_camera(pose: Pose, point) -> np.ndarray:
    world = np.append(np.asarray(point, dtype=float), 1.0)
    return (np.linalg.inv(_hom(pose)) @ world)[:3]


def _sector(x: float, z: float) -> str:
    if abs(x) < _EPS and abs(z) < _EPS:
        raise OracleError("object at person position")
    if z >= abs(x):
        return "front"
    if x > 0 and -x <= z < x:
        return "right"
    if x < 0 and x <= z < -x:
        return "left"
    return "back"


def _direction(pose: Pose, point) -> str:
    cam = _to_camera(pose, point)
    return _sector(cam[0], cam[2])


def _hand(pose: Pose, point) -> str:
    x = _to_camera(pose, point)[0]
    if abs(x) <= _HAND_DEADZONE:
        raise OracleError("ambiguous hand")
    return "right" if x > 0 else "left"


def _slope(distances) -> float:
    # OLS over fractions {0, .25, .5, .75, 1}: sum((x - 1/2) d) / 0.625
    xs = (0.0, 0.25, 0.5, 0.75, 1.0)
    return math.fsum((x - 0.5) * d for x, d in zip(xs, distances)) / 0.625


def _trend_label(slope: float, threshold: float) -> str:
    if slope > threshold:
        return "receding"
    if slope < -threshold:
        return "approaching"
    return "stationary"


def _nearest(track, t: float):
    return min(track, key=lambda e: (abs(e[0] - t), e[0]))


def _entries_in(track, t0: float, t1: float):
    return [e for e in track if t0 - _EPS <= e[0] <= t1 + _EPS]


def _action_by_id(scene, action_id: str):
    for action in scene.actions:
        if action.action_id == action_id:
            return action
    raise OracleError(f"unknown action {action_id!r}")


def _object_by_id(scene, object_id: str):
    for obj in scene.objects:
        if obj.object_id == object_id:
            return obj
    raise OracleError(f"unknown object {object_id!r}")


def _object_points(scene, object_id: str) -> np.ndarray:
    for index, obj in enumerate(scene.objects):
        if obj.object_id == object_id:
            return scene.point_cloud.points[
                np.asarray(scene.point_object_ids) == index]
    raise OracleError(f"unknown object {object_id!r}")


def _project_pixels(scene, pose: Pose, points: np.ndarray):
    """Pixel coordinates of the in-frustum subset, plus those points."""
    world = np.hstack([points, np.ones((len(points), 1))])
    cam = (np.linalg.inv(_hom(pose)) @ world.T).T[:, :3]
    front = cam[:, 2] > 0
    cam, points = cam[front], points[front]
    intr = scene.intrinsics
    u = intr.fx * cam[:, 0] / cam[:, 2] + intr.cx
    v = intr.fy * cam[:, 1] / cam[:, 2] + intr.cy
    px = np.rint(u - 0.5).astype(np.int64)
    py = np.rint(v - 0.5).astype(np.int64)
    ok = (px >= 0) & (px < intr.width) & (py >= 0) & (py < intr.height)
    return px[ok], py[ok], points[ok]


def _localize(scene, object_id: str, pose: Pose) -> np.ndarray:
    own_px, own_py, _ = _project_pixels(scene, pose, _object_points(scene, object_id))
    if own_px.size == 0:
        raise OracleError("object not visible in frame")
    wanted = set(zip(own_px.tolist(), own_py.tolist()))
    px, py, points = _project_pixels(scene, pose, scene.point_cloud.points)
    keep = [i for i, pixel in enumerate(zip(px.tolist(), py.tolist()))
            if pixel in wanted]
    if not keep:
        raise OracleError("object not visible in frame")
    return points[keep].mean(axis=0)


def _interval_mean_pose(scene, action) -> Pose:
    entries = _entries_in(scene.agent_track, action.start_time, action.end_time)
    if not entries:
        raise OracleError("no poses in interval")
    return mean_pose([pose for _, pose in entries])


def _interval_middle_pose(scene, action) -> Pose:
    entries = _entries_in(scene.agent_track, action.start_time, action.end_time)
    if not entries:
        raise OracleError("no poses in interval")
    return entries[(len(entries) - 1) // 2][1]


def _probe_action(scene, record, object_id: str):
    """The query action whose refs contain the object."""
    for action_id in record.query_actions:
        action = _action_by_id(scene, action_id)
        if object_id in action.object_refs:
            return action
    raise OracleError(f"no query action touches {object_id!r}")


def _object_position(scene, record, object_id: str) -> np.ndarray:
    action = _probe_action(scene, record, object_id)
    return _localize(scene, object_id, _interval_middle_pose(scene, action))


def _thresholds(record) -> dict:
    provenance = record.provenance if isinstance(record.provenance, dict) else {}
    values = provenance.get("thresholds", {})
    return {
        "trend_threshold": float(values.get("trend_threshold", 0.05)),
        "closer_margin": float(values.get("closer_margin", 0.05)),
        "nav_threshold": float(values.get("nav_threshold", 1.5)),
    }


def oracle_relations(scene, record) -> dict:
    """Recompute the record's relation payload from the scene."""
    kind = record.relation_payload.get("kind")
    thresholds = _thresholds(record)
    if kind in ("hand_proximity", "direction_change"):
        a1 = _action_by_id(scene, record.query_actions[0])
        ak = _action_by_id(scene, record.query_actions[1])
        object_id = record.query_objects[0]
        position = _object_position(scene, record, object_id)
        pose1 = _interval_mean_pose(scene, a1)
        posek = _interval_mean_pose(scene, ak)
        name = _object_by_id(scene, object_id).name
        if kind == "hand_proximity":
            h1, hk = _hand(pose1, position), _hand(posek, position)
            return {"kind": kind, "object_1": name, "a1": a1.label,
                    "ak": ak.label, "hand_a1": h1, "hand_ak": hk,
                    "changed": h1 != hk}
        d1, dk = _direction(pose1, position), _direction(posek, position)
        return {"kind": kind, "object_1": name, "a1": a1.label, "ak": ak.label,
                "dir_a1": d1, "dir_ak": dk, "changed": d1 != dk}

    if kind == "same_side":
        if len(record.query_actions) < 3:
            raise OracleError("same_side needs a reference action id")
        ref = _action_by_id(scene, record.query_actions[2])
        obj1, obj2 = record.query_objects
        pos1 = _object_position(scene, record, obj1)
        pos2 = _object_position(scene, record, obj2)
        pose = _interval_mean_pose(scene, ref)
        d1, d2 = _direction(pose, pos1), _direction(pose, pos2)
        return {"kind": kind,
                "object_1": _object_by_id(scene, obj1).name,
                "object_2": _object_by_id(scene, obj2).name,
                "a1": ref.label, "dir_1": d1, "dir_2": d2, "same": d1 == d2}

    if kind == "distance_trend":
        a1 = _action_by_id(scene, record.query_actions[0])
        ak = _action_by_id(scene, record.query_actions[1])
        object_id = record.query_objects[0]
        position = _object_position(scene, record, object_id)
        t0, t1 = a1.start_time, ak.end_time
        samples = [_nearest(scene.agent_track, t0 + f * (t1 - t0))
                   for f in (0.0, 0.25, 0.5, 0.75, 1.0)]
        distances = [float(np.linalg.norm(position - pose.translation))
                     for _, pose in samples]
        slope = _slope(distances)
        return {"kind": kind,
                "object_1": _object_by_id(scene, object_id).name,
                "a1": a1.label, "ak": ak.label,
                "trend": _trend_label(slope, thresholds["trend_threshold"]),
                "slope": slope}

    if kind == "closer_than":
        if len(record.query_actions) < 3:
            raise OracleError("closer_than needs a reference action id")
        ref = _action_by_id(scene, record.query_actions[2])
        obj1, obj2 = record.query_objects
        pos1 = _object_position(scene, record, obj1)
        pos2 = _object_position(scene, record, obj2)
        pose = _interval_mean_pose(scene, ref)
        d1 = float(np.linalg.norm(pos1 - pose.translation))
        d2 = float(np.linalg.norm(pos2 - pose.translation))
        margin = thresholds["closer_margin"]
        if abs(d1 - d2) <= margin:
            verdict = "tie"
        else:
            verdict = "a" if d1 < d2 else "b"
        return {"kind": kind,
                "object_1": _object_by_id(scene, obj1).name,
                "object_2": _object_by_id(scene, obj2).name,
                "a1": ref.label, "verdict": verdict,
                "distance_1": d1, "distance_2": d2}

    if kind == "find_my_item":
        placement = _action_by_id(scene, record.query_actions[0])
        object_id = record.query_objects[0]
        position = _localize(scene, object_id,
                             _interval_middle_pose(scene, placement))
        _, end_pose = _nearest(scene.agent_track, record.clip.end_time)
        return {"kind": kind,
                "object_1": _object_by_id(scene, object_id).name,
                "action": placement.label,
                "direction": _direction(end_pose, position)}

    if kind == "furniture_affordance":
        next_action = _action_by_id(scene, record.query_actions[0])
        item = _object_by_id(scene, next_action.object_refs[0])
        furniture = [o for o in scene.objects if o.is_furniture]
        if not furniture:
            raise OracleError("scene has no furniture")
        target = min(furniture,
                     key=lambda f: (float(np.linalg.norm(f.position - item.position)),
                                    f.object_id))
        options = record.relation_payload.get("options")
        if not isinstance(options, list) or len(set(options)) != len(options):
            raise OracleError("options must be a list of unique names")
        names = {o.name for o in furniture}
        if not set(options) <= names:
            raise OracleError("options must name scene furniture")
        if target.name not in options:
            raise OracleError("correct furniture missing from options")
        last = _action_by_id(scene, record.clip.action_ids[-1])
        return {"kind": kind, "options": options, "answer": target.name,
                "last_action": last.label}

    if kind == "action_planning":
        if len(record.query_actions) < 2:
            raise OracleError("action_planning needs clip actions plus next")
        next_action = _action_by_id(scene, record.query_actions[-1])
        completed = [_action_by_id(scene, aid).label
                     for aid in record.query_actions[:-1]]
        entries = _entries_in(scene.agent_track, next_action.start_time,
                              next_action.end_time)
        if not entries:
            raise OracleError("no poses in interval")
        destination = np.mean([pose.translation for _, pose in entries], axis=0)
        _, end_pose = _nearest(scene.agent_track, record.clip.end_time)
        displacement = float(np.linalg.norm(destination - end_pose.translation))
        moved = displacement > thresholds["nav_threshold"]
        if moved:
            direction = _direction(end_pose, destination)
            instruction = _INSTRUCTION[direction]
        else:
            direction, instruction = None, _STAY
        return {"kind": kind, "completed": completed,
                "next_action": next_action.label, "moved": moved,
                "displacement": displacement, "direction": direction,
                "instruction": instruction}

    raise OracleError(f"unknown payload kind {kind!r}")


def compare_payloads(stored: dict, recomputed: dict, float_tol: float = 1e-6):
    """Field-by-field comparison; floats within tolerance, all else exact."""
    mismatches = []
    for key in sorted(set(stored) | set(recomputed)):
        if key not in stored:
            mismatches.append(f"{key}: missing from stored payload")
            continue
        if key not in recomputed:
            mismatches.append(f"{key}: missing from recomputed payload")
            continue
        a, b = stored[key], recomputed[key]
        if isinstance(a, bool) or isinstance(b, bool):
            if a is not b:
                mismatches.append(f"{key}: {a!r} != {b!r}")
        elif isinstance(a, float) or isinstance(b, float):
            if not (isinstance(a, (int, float)) and isinstance(b, (int, float))):
                mismatches.append(f"{key}: {a!r} != {b!r}")
            elif not abs(float(a) - float(b)) <= float_tol:
                mismatches.append(f"{key}: {a!r} != {b!r}")
        elif a != b:
            mismatches.append(f"{key}: {a!r} != {b!r}")
    return mismatches


def audit_records(records, scenes, float_tol: float = 1e-6):
    """Recompute every record against its scene.

    Returns [(record_id, problems)] for records that disagree or cannot be
    recomputed; an empty list means full agreement.
    """
    by_id = {scene.scene_id: scene for scene in scenes}
    failures = []
    for record in records:
        scene = by_id.get(record.scene_id)
        if scene is None:
            failures.append((record.record_id, [f"unknown scene {record.scene_id!r}"]))
            continue
        try:
            recomputed = oracle_relations(scene, record)
        except (OracleError, IndexError) as exc:
            failures.append((record.record_id, [f"recomputation failed: {exc}"]))
            continue
        problems = compare_payloads(record.relation_payload, recomputed, float_tol)
        if problems:
            failures.append((record.record_id, problems))
    return failures
