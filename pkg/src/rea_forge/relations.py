"""Egocentric spatial relations between a tracked person and scene objects.

All verdicts quantize camera-frame geometry: x right, y down, z forward.
Horizontal bearing is theta = atan2(x, z), so theta = 0 looks straight ahead
and positive angles turn right.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .geom import Pose, as_vec3, world_to_camera

DIRECTION_FRONT_HALF_ANGLE_DEG = 45.0
DISTANCE_TREND_THRESHOLD = 0.05
NAVIGATION_DISPLACEMENT_M = 1.5
CLOSER_MARGIN_M = 0.05
DEGENERATE_RADIUS = 1e-9

TREND_SAMPLE_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)

Track = Sequence[tuple[float, Pose]]


class Direction(enum.Enum):
    FRONT = "front"
    BACK = "back"
    LEFT = "left"
    RIGHT = "right"


class Trend(enum.Enum):
    APPROACHING = "approaching"
    RECEDING = "receding"
    STATIONARY = "stationary"


class Closer(enum.Enum):
    A = "a"
    B = "b"
    TIE = "tie"


class Hand(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class DistanceTrend:
    """Trend class plus the fitted slope in meters per normalized interval."""

    trend: Trend
    slope: float

    @staticmethod
    def from_slope(slope: float, threshold: float = DISTANCE_TREND_THRESHOLD) -> "DistanceTrend":
        if slope < -threshold:
            kind = Trend.APPROACHING
        elif slope > threshold:
            kind = Trend.RECEDING
        else:
            kind = Trend.STATIONARY
        return DistanceTrend(kind, float(slope))


@dataclass(frozen=True)
class NavigationVerdict:
    """Whether the person meaningfully relocated, and which way if so."""

    moved: bool
    displacement: float
    direction: Optional[Direction]


NavigationRefiner = Callable[[NavigationVerdict], NavigationVerdict]


def relative_direction(person: Pose, obj) -> Direction:
    """Quantize the object's horizontal bearing into front/right/back/left.

    Front covers |theta| <= 45 deg, right (45, 135], back |theta| > 135,
    left [-135, -45); boundaries are half-open as listed.
    """
    cam = world_to_camera(person, obj)
    x, z = cam[0], cam[2]
    if math.hypot(x, z) <= DEGENERATE_RADIUS:
        raise ValueError("object at person position")
    theta = math.degrees(math.atan2(x, z))
    if abs(theta) <= DIRECTION_FRONT_HALF_ANGLE_DEG:
        return Direction.FRONT
    if DIRECTION_FRONT_HALF_ANGLE_DEG < theta <= 180.0 - DIRECTION_FRONT_HALF_ANGLE_DEG:
        return Direction.RIGHT
    if abs(theta) > 180.0 - DIRECTION_FRONT_HALF_ANGLE_DEG:
        return Direction.BACK
    return Direction.LEFT


def direction_change(pose_a: Pose, pose_b: Pose, obj) -> tuple[Direction, Direction, bool]:
    """Directions of a fixed object from two poses and whether they differ."""
    da = relative_direction(pose_a, obj)
    db = relative_direction(pose_b, obj)
    return da, db, da is not db


def _nearest_entry(track: Track, t: float) -> tuple[float, Pose]:
    """Track entry closest in time to t; exact midpoints resolve earlier."""
    best = None
    best_key = None
    for entry in track:
        key = abs(entry[0] - t)
        if best_key is None or key < best_key:
            best, best_key = entry, key
    return best


def distance_trend(
    track: Track,
    obj,
    interval: tuple[float, float],
    threshold: float = DISTANCE_TREND_THRESHOLD,
) -> DistanceTrend:
    """Fit person-object distance over five poses spanning an interval.

    Poses are taken at normalized times {0, 0.25, 0.5, 0.75, 1} of the
    interval (nearest track entry, ties to the earlier entry). The slope of
    an ordinary least-squares line through (normalized time, distance) is
    classified against +-threshold; |slope| <= threshold is stationary.
    """
    t0, t1 = float(interval[0]), float(interval[1])
    if not track:
        raise ValueError("empty track")
    if t1 <= t0:
        raise ValueError("interval end must exceed start")
    times = [float(e[0]) for e in track]
    if t0 < min(times) or t1 > max(times):
        raise ValueError("track does not cover interval")
    inside = {t for t in times if t0 <= t <= t1}
    if len(inside) < 2:
        raise ValueError("fewer than 2 distinct track timestamps within interval")
    obj = as_vec3(obj)
    xs = np.asarray(TREND_SAMPLE_FRACTIONS)
    ds = np.empty(len(xs))
    for i, f in enumerate(TREND_SAMPLE_FRACTIONS):
        _, pose = _nearest_entry(track, t0 + f * (t1 - t0))
        ds[i] = np.linalg.norm(pose.translation - obj)
    xc = xs - xs.mean()
    slope = float((xc * (ds - ds.mean())).sum() / (xc * xc).sum())
    return DistanceTrend.from_slope(slope, threshold)


def closer_than(person: Pose, obj_a, obj_b, margin: float = CLOSER_MARGIN_M) -> Closer:
    """Which of two objects the person is nearer, with a tie margin in meters."""
    da = float(np.linalg.norm(person.translation - as_vec3(obj_a)))
    db = float(np.linalg.norm(person.translation - as_vec3(obj_b)))
    if abs(da - db) <= margin:
        return Closer.TIE
    return Closer.A if da < db else Closer.B


def same_side(person: Pose, obj_a, obj_b) -> tuple[Direction, Direction, bool]:
    """Whether two objects fall in the same direction sector from a pose."""
    da = relative_direction(person, obj_a)
    db = relative_direction(person, obj_b)
    return da, db, da is db


def estimate_navigation(
    start: Pose,
    destination,
    threshold: float = NAVIGATION_DISPLACEMENT_M,
    refiner: Optional[NavigationRefiner] = None,
) -> NavigationVerdict:
    """Judge whether reaching a destination requires relocating.

    The person is considered to move only when the straight-line displacement
    strictly exceeds the threshold; the movement direction is quantized from
    the start pose only in that case.
    """
    destination = as_vec3(destination)
    displacement = float(np.linalg.norm(destination - start.translation))
    moved = displacement > threshold
    direction = relative_direction(start, destination) if moved else None
    verdict = NavigationVerdict(moved, displacement, direction)
    if refiner is not None:
        verdict = refiner(verdict)
    return verdict


def hand_proximity(person: Pose, obj) -> Hand:
    """Proxy for the engaged hand: the side of the camera's vertical plane.

    The object's camera-frame x decides; |x| <= 1e-9 is ambiguous and raises.
    """
    x = world_to_camera(person, obj)[0]
    if abs(x) <= DEGENERATE_RADIUS:
        raise ValueError("ambiguous hand")
    return Hand.RIGHT if x > 0 else Hand.LEFT
