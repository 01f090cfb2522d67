"""QA record generation, serialization, and validation.

Records are produced from synthetic scenes by sampling a clip, choosing a
seeded template, computing the spatial relation it asks about, and rendering
question/answer text. Generation is a pure function of (scenes, n, mix,
seed, params): rerunning with the same inputs yields byte-identical JSONL.
"""
from __future__ import annotations

import enum
import json
import logging
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geom, relations, templates
from .cloud import localize_object

logger = logging.getLogger(__name__)

CLIP_MIN_S = 20.0
CLIP_MAX_S = 40.0
ACTION_MIN_S = 3.0
ACTION_MAX_S = 5.0
MIN_ACTION_GAP_S = 8.0
PLACEMENT_PREFIX = "put down "
_EPS = 1e-9

# training-split record counts per task, used for the default mix
TRAIN_TASK_COUNTS = {
    "relative_direction": 4765,
    "relative_distance": 4796,
    "find_my_item": 4118,
    "furniture_affordance": 4192,
    "action_planning": 6500,
}


class TaskKind(enum.Enum):
    RELATIVE_DIRECTION = "relative_direction"
    RELATIVE_DISTANCE = "relative_distance"
    FIND_MY_ITEM = "find_my_item"
    FURNITURE_AFFORDANCE = "furniture_affordance"
    ACTION_PLANNING = "action_planning"


class EligibilityError(RuntimeError):
    """Raised when a scene or clip cannot support the requested record."""


@dataclass
class ActionInterval:
    action_id: str
    label: str
    start_time: float
    end_time: float
    object_refs: list = field(default_factory=list)

    def __post_init__(self):
        if not self.end_time > self.start_time:
            raise ValueError("action interval end must exceed start")
        duration = self.end_time - self.start_time
        if not ACTION_MIN_S - _EPS <= duration <= ACTION_MAX_S + _EPS:
            warnings.warn(
                f"action {self.action_id!r} duration {duration:.2f}s outside "
                f"[{ACTION_MIN_S:g}, {ACTION_MAX_S:g}]s", stacklevel=2)

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time


@dataclass
class Clip:
    scene_id: str
    start_time: float
    end_time: float
    action_ids: list = field(default_factory=list)

    def __post_init__(self):
        if not self.end_time > self.start_time:
            raise ValueError("clip end must exceed start")
        duration = self.end_time - self.start_time
        if not CLIP_MIN_S - _EPS <= duration <= CLIP_MAX_S + _EPS:
            raise ValueError(
                f"clip duration {duration:.3f}s outside [{CLIP_MIN_S:g}, {CLIP_MAX_S:g}]s")

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class GenParams:
    """Tunable thresholds threaded through generation and stored in provenance."""

    trend_threshold: float = relations.DISTANCE_TREND_THRESHOLD
    closer_margin: float = relations.CLOSER_MARGIN_M
    nav_threshold: float = relations.NAVIGATION_DISPLACEMENT_M
    min_action_gap: float = MIN_ACTION_GAP_S

    def __post_init__(self):
        for name in ("trend_threshold", "closer_margin", "nav_threshold", "min_action_gap"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return {
            "trend_threshold": self.trend_threshold,
            "closer_margin": self.closer_margin,
            "nav_threshold": self.nav_threshold,
            "min_action_gap": self.min_action_gap,
        }


DEFAULT_PARAMS = GenParams()


@dataclass
class TaskMix:
    """Per-task fractions that must sum to 1."""

    fractions: dict

    def __post_init__(self):
        clean = {}
        for task, frac in self.fractions.items():
            if not isinstance(task, TaskKind):
                task = TaskKind(task)
            frac = float(frac)
            if frac < 0:
                raise ValueError("mix fractions must be non-negative")
            clean[task] = frac
        for task in TaskKind:
            clean.setdefault(task, 0.0)
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mix fractions must sum to 1, got {total!r}")
        self.fractions = clean

    @staticmethod
    def default() -> "TaskMix":
        total = sum(TRAIN_TASK_COUNTS.values())
        return TaskMix({TaskKind(k): v / total for k, v in TRAIN_TASK_COUNTS.items()})

    @staticmethod
    def uniform() -> "TaskMix":
        return TaskMix({task: 1.0 / len(TaskKind) for task in TaskKind})

    def allocate(self, n: int) -> dict:
        """Largest-remainder apportionment of n records across tasks.

        Ties on the fractional part break toward the earlier TaskKind.
        """
        if n < 0:
            raise ValueError("n must be non-negative")
        order = list(TaskKind)
        exact = {t: n * self.fractions[t] for t in order}
        counts = {t: int(exact[t]) for t in order}
        leftover = n - sum(counts.values())
        by_remainder = sorted(
            order, key=lambda t: (-(exact[t] - counts[t]), order.index(t)))
        for t in by_remainder[:leftover]:
            counts[t] += 1
        return counts


@dataclass
class QARecord:
    record_id: str
    scene_id: str
    task: TaskKind
    clip: Clip
    question: str
    answer: str
    query_objects: list
    query_actions: list
    relation_payload: dict
    provenance: dict


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_clip(scene, seed, max_attempts: int = 200) -> Clip:
    """Sample a clip of 20 to 40 seconds containing >= 2 complete actions."""
    rng = _as_rng(seed)
    track = scene.agent_track
    if not track or not scene.actions:
        raise EligibilityError("scene too short")
    t0, t1 = track[0][0], track[-1][0]
    total = t1 - t0
    if total < CLIP_MIN_S - _EPS:
        raise EligibilityError("scene too short")
    hi = min(CLIP_MAX_S, total)
    for _ in range(max_attempts):
        duration = float(rng.uniform(CLIP_MIN_S, hi))
        start = t0 + float(rng.uniform(0.0, max(total - duration, 0.0)))
        end = start + duration
        contained = [a for a in scene.actions
                     if a.start_time >= start - _EPS and a.end_time <= end + _EPS]
        if len(contained) >= 2:
            contained.sort(key=lambda a: a.start_time)
            return Clip(scene.scene_id, start, end, [a.action_id for a in contained])
    raise EligibilityError("scene too short")


def _clip_actions(scene, clip: Clip) -> list:
    by_id = {a.action_id: a for a in scene.actions}
    try:
        return [by_id[aid] for aid in clip.action_ids]
    except KeyError as exc:
        raise EligibilityError(f"clip references unknown action {exc}") from exc


def select_action_pair(scene, clip: Clip, min_gap: float = MIN_ACTION_GAP_S):
    """Pick the widest-gap non-adjacent action pair (a1, ak) in the clip.

    Both actions' objects must be touched at most once within the clip so
    the object stays where the interaction left it. Gap ties resolve to the
    earliest pair.
    """
    actions = _clip_actions(scene, clip)
    if len(actions) < 3:
        raise EligibilityError("no eligible action pair")
    touches = Counter(ref for a in actions for ref in a.object_refs)
    best = None
    for i in range(len(actions)):
        for j in range(i + 2, len(actions)):
            a1, ak = actions[i], actions[j]
            gap = ak.start_time - a1.end_time
            if gap < min_gap - _EPS:
                continue
            refs = set(a1.object_refs) | set(ak.object_refs)
            if any(touches[r] > 1 for r in refs):
                continue
            key = (-gap, i, j)
            if best is None or key < best[0]:
                best = (key, (a1, ak))
    if best is None:
        raise EligibilityError("no eligible action pair")
    return best[1]


def _track_slice(track, start: float, end: float) -> list:
    return [(t, pose) for t, pose in track if start - _EPS <= t <= end + _EPS]


def _person_pose(scene, action: ActionInterval) -> geom.Pose:
    entries = _track_slice(scene.agent_track, action.start_time, action.end_time)
    if not entries:
        raise EligibilityError("no poses in interval")
    return geom.mean_pose([pose for _, pose in entries])


def _middle_frame_pose(scene, action: ActionInterval) -> geom.Pose:
    entries = _track_slice(scene.agent_track, action.start_time, action.end_time)
    if not entries:
        raise EligibilityError("no poses in interval")
    return entries[(len(entries) - 1) // 2][1]


def _clip_end_pose(scene, clip: Clip) -> geom.Pose:
    return min(scene.agent_track, key=lambda e: (abs(e[0] - clip.end_time), e[0]))[1]


def _object_position(scene, object_id: str, action: ActionInterval) -> np.ndarray:
    """Localize an object from the middle frame of its interaction."""
    pose = _middle_frame_pose(scene, action)
    mask = scene.render_object_mask(object_id, pose)
    try:
        position, _ = localize_object(scene.point_cloud, mask, scene.intrinsics, pose)
    except ValueError as exc:
        raise EligibilityError(str(exc)) from exc
    return position


def _object_name(scene, object_id: str) -> str:
    for obj in scene.objects:
        if obj.object_id == object_id:
            return obj.name
    raise EligibilityError(f"unknown object {object_id!r}")


def _next_action_after(scene, clip: Clip) -> ActionInterval:
    candidates = [a for a in scene.actions if a.start_time >= clip.end_time - _EPS]
    if not candidates:
        raise EligibilityError("no action after clip")
    return min(candidates, key=lambda a: a.start_time)


def _item_of(action: ActionInterval) -> str:
    if not action.object_refs:
        raise EligibilityError(f"action {action.action_id!r} touches no object")
    return action.object_refs[0]


def _relative_direction_payload(scene, clip, kind, params, rng):
    a1, ak = select_action_pair(scene, clip, params.min_action_gap)
    if kind == "same_side":
        obj1, obj2 = _item_of(a1), _item_of(ak)
        if obj1 == obj2:
            raise EligibilityError("action pair shares one object")
        pos1 = _object_position(scene, obj1, a1)
        pos2 = _object_position(scene, obj2, ak)
        # viewpoint comes from any clip action so both sectors vary freely
        candidates = _clip_actions(scene, clip)
        ref = candidates[int(rng.integers(len(candidates)))]
        pose_ref = _person_pose(scene, ref)
        try:
            d1, d2, same = relations.same_side(pose_ref, pos1, pos2)
        except ValueError as exc:
            raise EligibilityError(str(exc)) from exc
        payload = {
            "kind": kind,
            "object_1": _object_name(scene, obj1),
            "object_2": _object_name(scene, obj2),
            "a1": ref.label,
            "dir_1": d1.value,
            "dir_2": d2.value,
            "same": same,
        }
        return payload, [obj1, obj2], [a1.action_id, ak.action_id, ref.action_id]
    # track either endpoint's object through time, seeded for variety
    probe = a1 if int(rng.integers(2)) == 0 else ak
    obj = _item_of(probe)
    pos = _object_position(scene, obj, probe)
    pose1 = _person_pose(scene, a1)
    posek = _person_pose(scene, ak)
    try:
        if kind == "hand_proximity":
            h1 = relations.hand_proximity(pose1, pos)
            hk = relations.hand_proximity(posek, pos)
            payload = {
                "kind": kind,
                "object_1": _object_name(scene, obj),
                "a1": a1.label,
                "ak": ak.label,
                "hand_a1": h1.value,
                "hand_ak": hk.value,
                "changed": h1 != hk,
            }
        else:
            d1, dk, changed = relations.direction_change(pose1, posek, pos)
            payload = {
                "kind": kind,
                "object_1": _object_name(scene, obj),
                "a1": a1.label,
                "ak": ak.label,
                "dir_a1": d1.value,
                "dir_ak": dk.value,
                "changed": changed,
            }
    except ValueError as exc:
        raise EligibilityError(str(exc)) from exc
    return payload, [obj], [a1.action_id, ak.action_id]


def _relative_distance_payload(scene, clip, kind, params, rng):
    a1, ak = select_action_pair(scene, clip, params.min_action_gap)
    if kind == "closer_than":
        obj1, obj2 = _item_of(a1), _item_of(ak)
        if obj1 == obj2:
            raise EligibilityError("action pair shares one object")
        pos1 = _object_position(scene, obj1, a1)
        pos2 = _object_position(scene, obj2, ak)
        candidates = _clip_actions(scene, clip)
        ref = candidates[int(rng.integers(len(candidates)))]
        pose_ref = _person_pose(scene, ref)
        verdict = relations.closer_than(pose_ref, pos1, pos2, params.closer_margin)
        payload = {
            "kind": kind,
            "object_1": _object_name(scene, obj1),
            "object_2": _object_name(scene, obj2),
            "a1": ref.label,
            "verdict": verdict.value,
            "distance_1": float(np.linalg.norm(pos1 - pose_ref.translation)),
            "distance_2": float(np.linalg.norm(pos2 - pose_ref.translation)),
        }
        return payload, [obj1, obj2], [a1.action_id, ak.action_id, ref.action_id]
    probe = a1 if int(rng.integers(2)) == 0 else ak
    obj = _item_of(probe)
    pos = _object_position(scene, obj, probe)
    try:
        trend = relations.distance_trend(
            scene.agent_track, pos, (a1.start_time, ak.end_time), params.trend_threshold)
    except ValueError as exc:
        raise EligibilityError(str(exc)) from exc
    payload = {
        "kind": kind,
        "object_1": _object_name(scene, obj),
        "a1": a1.label,
        "ak": ak.label,
        "trend": trend.trend.value,
        "slope": float(trend.slope),
    }
    return payload, [obj], [a1.action_id, ak.action_id]


def _find_my_item_payload(scene, clip, kind, params, rng):
    actions = _clip_actions(scene, clip)
    placement = None
    for i, action in enumerate(actions):
        if not action.label.startswith(PLACEMENT_PREFIX):
            continue
        obj = _item_of(action)
        if any(obj in later.object_refs for later in actions[i + 1:]):
            continue
        placement = action
    if placement is None:
        raise EligibilityError("no placement action in clip")
    obj = _item_of(placement)
    pos = _object_position(scene, obj, placement)
    end_pose = _clip_end_pose(scene, clip)
    try:
        direction = relations.relative_direction(end_pose, pos)
    except ValueError as exc:
        raise EligibilityError(str(exc)) from exc
    payload = {
        "kind": kind,
        "object_1": _object_name(scene, obj),
        "action": placement.label,
        "direction": direction.value,
    }
    return payload, [obj], [placement.action_id]


def _furniture_affordance_payload(scene, clip, kind, params, rng):
    next_action = _next_action_after(scene, clip)
    furniture = [o for o in scene.objects if o.is_furniture]
    if len(furniture) < 2:
        raise EligibilityError("need at least two furniture objects")
    item = next(o for o in scene.objects if o.object_id == _item_of(next_action))
    gt = min(furniture,
             key=lambda f: (float(np.linalg.norm(f.position - item.position)), f.object_id))
    end_pose = _clip_end_pose(scene, clip)
    others = sorted(
        (f for f in furniture if f.object_id != gt.object_id),
        key=lambda f: (float(np.linalg.norm(f.position - end_pose.translation)), f.object_id))
    n_options = min(int(rng.integers(2, 4)), 1 + len(others))
    pool = [gt] + others[:n_options - 1]
    order = rng.permutation(len(pool))
    options = [pool[i] for i in order]
    actions = _clip_actions(scene, clip)
    payload = {
        "kind": kind,
        "options": [o.name for o in options],
        "answer": gt.name,
        "last_action": actions[-1].label,
    }
    return payload, [o.object_id for o in options], [next_action.action_id]


def _action_planning_payload(scene, clip, kind, params, rng):
    next_action = _next_action_after(scene, clip)
    actions = _clip_actions(scene, clip)
    entries = _track_slice(scene.agent_track, next_action.start_time, next_action.end_time)
    if not entries:
        raise EligibilityError("no poses in interval")
    destination = np.mean([pose.translation for _, pose in entries], axis=0)
    end_pose = _clip_end_pose(scene, clip)
    verdict = relations.estimate_navigation(end_pose, destination, params.nav_threshold)
    if verdict.moved:
        instruction = templates.MOVEMENT_INSTRUCTION[verdict.direction.value]
        direction = verdict.direction.value
    else:
        instruction = templates.STAY_INSTRUCTION
        direction = None
    payload = {
        "kind": kind,
        "completed": [a.label for a in actions],
        "next_action": next_action.label,
        "moved": verdict.moved,
        "displacement": float(verdict.displacement),
        "direction": direction,
        "instruction": instruction,
    }
    query_actions = [*clip.action_ids, next_action.action_id]
    return payload, [], query_actions


_PAYLOAD_BUILDERS = {
    TaskKind.RELATIVE_DIRECTION: _relative_direction_payload,
    TaskKind.RELATIVE_DISTANCE: _relative_distance_payload,
    TaskKind.FIND_MY_ITEM: _find_my_item_payload,
    TaskKind.FURNITURE_AFFORDANCE: _furniture_affordance_payload,
    TaskKind.ACTION_PLANNING: _action_planning_payload,
}


def _seed_repr(seed):
    if isinstance(seed, np.random.Generator):
        return None
    if isinstance(seed, (tuple, list)):
        return [int(v) for v in seed]
    return int(seed)


def generate_qa(scene, task: TaskKind, seed, record_id: str | None = None,
                params: GenParams = DEFAULT_PARAMS) -> QARecord:
    """Generate one QA record for the given task from the scene.

    Raises EligibilityError when the sampled clip cannot support the task;
    callers retry with a fresh seed.
    """
    task = TaskKind(task)
    seed_note = _seed_repr(seed)
    rng = _as_rng(seed)
    clip = sample_clip(scene, rng)
    template_id = int(rng.integers(templates.template_count(task.value)))
    kind = templates.payload_kind(task.value, template_id)
    payload, query_objects, query_actions = _PAYLOAD_BUILDERS[task](
        scene, clip, kind, params, rng)
    question = templates.render_question(task.value, template_id, payload)
    answer = templates.render_answer(task.value, template_id, payload)
    if record_id is None:
        record_id = f"{scene.scene_id}-{task.value}-{seed_note}"
    return QARecord(
        record_id=record_id,
        scene_id=scene.scene_id,
        task=task,
        clip=clip,
        question=question,
        answer=answer,
        query_objects=query_objects,
        query_actions=query_actions,
        relation_payload=payload,
        provenance={
            "seed": seed_note,
            "template_id": template_id,
            "thresholds": params.to_dict(),
        },
    )


@dataclass
class Shortfall:
    task: TaskKind
    record_index: int
    attempts: int
    last_error: str


@dataclass
class GenerationReport:
    requested: dict
    generated: dict
    shortfalls: list

    @property
    def ok(self) -> bool:
        return not self.shortfalls


@dataclass
class GenerationResult:
    records: list
    report: GenerationReport


def _generate_slot(scenes, task, task_index, global_index, seed, params, max_attempts):
    last_error = "unknown"
    for attempt in range(max_attempts):
        scene = scenes[(global_index + attempt) % len(scenes)]
        record_seed = (seed, task_index, global_index, attempt)
        try:
            record = generate_qa(scene, task, record_seed,
                                 record_id=f"qa-{global_index:06d}", params=params)
            return record, attempt + 1, None
        except EligibilityError as exc:
            last_error = str(exc)
    return None, max_attempts, last_error


def generate_dataset(scenes, n: int, mix: TaskMix | None = None, seed: int = 0,
                     params: GenParams = DEFAULT_PARAMS, max_attempts: int = 40,
                     threads: int = 1) -> GenerationResult:
    """Generate n records across scenes following the task mix.

    Per-record failures retry on the next scene with a fresh derived seed;
    exhausted slots are reported as shortfalls rather than raised. Output is
    deterministic for fixed inputs regardless of thread count.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not scenes:
        raise ValueError("no scenes to generate from")
    if threads < 1:
        raise ValueError("threads must be positive")
    mix = TaskMix.default() if mix is None else mix
    allocation = mix.allocate(n)
    slots = []
    global_index = 0
    for task_index, task in enumerate(TaskKind):
        for _ in range(allocation[task]):
            slots.append((task, task_index, global_index))
            global_index += 1

    def run(slot):
        task, task_index, idx = slot
        return slot, _generate_slot(scenes, task, task_index, idx, seed, params, max_attempts)

    if threads == 1:
        outcomes = [run(slot) for slot in slots]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, slots))

    records, shortfalls = [], []
    generated = {task: 0 for task in TaskKind}
    for (task, _, idx), (record, attempts, error) in outcomes:
        if record is None:
            shortfalls.append(Shortfall(task, idx, attempts, error))
            logger.warning("record %d (%s) failed after %d attempts: %s",
                           idx, task.value, attempts, error)
        else:
            records.append(record)
            generated[task] += 1
    report = GenerationReport(
        requested={task.value: allocation[task] for task in TaskKind},
        generated={task.value: generated[task] for task in TaskKind},
        shortfalls=shortfalls,
    )
    return GenerationResult(records=records, report=report)


RECORD_KEYS = ("record_id", "scene_id", "task", "clip", "question", "answer",
               "query_objects", "query_actions", "relation_payload", "provenance")


def record_to_dict(record: QARecord) -> dict:
    return {
        "record_id": record.record_id,
        "scene_id": record.scene_id,
        "task": record.task.value,
        "clip": {
            "start_time": record.clip.start_time,
            "end_time": record.clip.end_time,
            "action_ids": list(record.clip.action_ids),
        },
        "question": record.question,
        "answer": record.answer,
        "query_objects": list(record.query_objects),
        "query_actions": list(record.query_actions),
        "relation_payload": record.relation_payload,
        "provenance": record.provenance,
    }


def record_from_dict(data: dict) -> QARecord:
    if not isinstance(data, dict):
        raise ValueError("record must be an object")
    missing = set(RECORD_KEYS) - set(data)
    extra = set(data) - set(RECORD_KEYS)
    if missing:
        raise ValueError(f"record missing keys: {sorted(missing)}")
    if extra:
        raise ValueError(f"record has unexpected keys: {sorted(extra)}")
    clip_data = data["clip"]
    if not isinstance(clip_data, dict):
        raise ValueError("clip must be an object")
    try:
        clip = Clip(data["scene_id"], float(clip_data["start_time"]),
                    float(clip_data["end_time"]), list(clip_data["action_ids"]))
        task = TaskKind(data["task"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed record: {exc}") from exc
    return QARecord(
        record_id=data["record_id"],
        scene_id=data["scene_id"],
        task=task,
        clip=clip,
        question=data["question"],
        answer=data["answer"],
        query_objects=list(data["query_objects"]),
        query_actions=list(data["query_actions"]),
        relation_payload=data["relation_payload"],
        provenance=data["provenance"],
    )


def dumps_jsonl(records) -> str:
    lines = [json.dumps(record_to_dict(r), ensure_ascii=False) for r in records]
    return "".join(line + "\n" for line in lines)


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_jsonl(records))


def read_jsonl(path):
    """Parse a JSONL dataset. Returns (records, errors) with one error
    entry per unparseable line as (line_number, message)."""
    records, errors = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                errors.append((lineno, str(exc)))
    return records, errors


@dataclass
class ValidationIssue:
    record_id: str
    problem: str


@dataclass
class ValidationReport:
    total: int
    issues: list

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_dataset(records) -> ValidationReport:
    """Check structural invariants and byte-exact text regeneration."""
    issues = []
    seen_ids = set()
    for record in records:
        rid = record.record_id

        def bad(problem):
            issues.append(ValidationIssue(rid, problem))

        if rid in seen_ids:
            bad("duplicate record_id")
        seen_ids.add(rid)
        if not record.question or not isinstance(record.question, str):
            bad("empty question")
        if not record.answer or not isinstance(record.answer, str):
            bad("empty answer")
        payload = record.relation_payload
        if not isinstance(payload, dict) or "kind" not in payload:
            bad("relation_payload missing kind")
            continue
        provenance = record.provenance
        template_id = provenance.get("template_id") if isinstance(provenance, dict) else None
        if not isinstance(template_id, int):
            bad("provenance missing template_id")
            continue
        try:
            expected_kind = templates.payload_kind(record.task.value, template_id)
            if payload["kind"] != expected_kind:
                bad(f"payload kind {payload['kind']!r} does not match template")
                continue
            question = templates.render_question(record.task.value, template_id, payload)
            answer = templates.render_answer(record.task.value, template_id, payload)
        except ValueError as exc:
            bad(f"cannot regenerate text: {exc}")
            continue
        if question != record.question:
            bad("question does not regenerate from payload")
        if answer != record.answer:
            bad("answer does not regenerate from payload")
    return ValidationReport(total=len(records), issues=issues)
