import math

import numpy as np
import pytest

from rea_forge import geom, relations
from rea_forge.relations import Closer, Direction, DistanceTrend, Hand, Trend


def sector_oracle(x: float, z: float) -> Direction:
    """Exhaustive sector tests on raw camera coordinates, no trigonometry.

    Derived from tan boundaries: front |theta| <= 45 means z > 0 and |x| <= z,
    and so on around the circle with half-open ownership of each boundary.
    """
    if z > 0 and abs(x) <= z:
        return Direction.FRONT
    if x > 0 and -x <= z < x:
        return Direction.RIGHT
    if x < 0 and x <= z < -x:
        return Direction.LEFT
    return Direction.BACK


def random_pose(rng, scale=4.0):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return geom.Pose(geom.rotation_from_quat(q), rng.uniform(-scale, scale, size=3))


def track_from_positions(times, positions):
    return [(t, geom.Pose(np.eye(3), p)) for t, p in zip(times, positions)]


class TestRelativeDirection:
    def test_axis_cases(self):
        p = geom.Pose.identity()
        assert relations.relative_direction(p, [0.0, 0.0, 1.0]) is Direction.FRONT
        assert relations.relative_direction(p, [1.0, 0.0, 0.0]) is Direction.RIGHT
        assert relations.relative_direction(p, [0.0, 0.0, -1.0]) is Direction.BACK
        assert relations.relative_direction(p, [-1.0, 0.0, 0.0]) is Direction.LEFT

    def test_boundary_ownership(self):
        p = geom.Pose.identity()
        assert relations.relative_direction(p, [1.0, 0.0, 1.0]) is Direction.FRONT    # +45
        assert relations.relative_direction(p, [-1.0, 0.0, 1.0]) is Direction.FRONT   # -45
        assert relations.relative_direction(p, [1.0, 0.0, -1.0]) is Direction.RIGHT   # +135
        assert relations.relative_direction(p, [-1.0, 0.0, -1.0]) is Direction.LEFT   # -135

    def test_vertical_component_ignored(self):
        p = geom.Pose.identity()
        assert relations.relative_direction(p, [0.0, 9.0, 1.0]) is Direction.FRONT
        assert relations.relative_direction(p, [0.0, -9.0, 1.0]) is Direction.FRONT

    def test_degenerate_raises(self):
        p = geom.Pose.identity()
        with pytest.raises(ValueError, match="object at person position"):
            relations.relative_direction(p, [0.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="object at person position"):
            relations.relative_direction(p, [0.0, 5.0, 0.0])  # on the vertical axis

    def test_agrees_with_sector_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(10_000):
            pose = random_pose(rng)
            obj = rng.uniform(-8, 8, size=3)
            cam = geom.world_to_camera(pose, obj)
            if math.hypot(cam[0], cam[2]) <= 1e-9:
                continue
            assert relations.relative_direction(pose, obj) is sector_oracle(cam[0], cam[2])

    def test_rigid_transform_invariance(self):
        rng = np.random.default_rng(32)
        for _ in range(200):
            pose = random_pose(rng)
            obj = rng.uniform(-5, 5, size=3)
            g = random_pose(rng)
            moved_pose = geom.compose(g, pose)
            moved_obj = geom.camera_to_world(g, obj)
            assert relations.relative_direction(pose, obj) is \
                relations.relative_direction(moved_pose, moved_obj)


class TestDirectionChange:
    def test_half_turn_flips_front_to_back(self):
        p0 = geom.Pose.identity()
        p1 = geom.Pose(np.diag([-1.0, 1.0, -1.0]), np.zeros(3))  # yaw 180
        da, db, changed = relations.direction_change(p0, p1, [0.0, 0.0, 2.0])
        assert (da, db, changed) == (Direction.FRONT, Direction.BACK, True)

    def test_static_pose_unchanged(self):
        p = geom.Pose.identity()
        da, db, changed = relations.direction_change(p, p, [1.0, 0.0, 0.5])
        assert da is db
        assert not changed


class TestDistanceTrend:
    def test_straight_walk_in_slope(self):
        # person walks 3 m -> 1 m from the object; sampled distances are
        # exactly (3, 2.5, 2, 1.5, 1), whose OLS slope is exactly -2
        times = [0.0, 1.0, 2.0, 3.0, 4.0]
        xs = [3.0 - 0.5 * t for t in times]
        track = track_from_positions(times, [[x, 0.0, 0.0] for x in xs])
        out = relations.distance_trend(track, [0.0, 0.0, 0.0], (0.0, 4.0))
        assert out.slope == -2.0
        assert out.trend is Trend.APPROACHING

    def test_receding(self):
        times = [0.0, 1.0, 2.0, 3.0, 4.0]
        track = track_from_positions(times, [[1.0 + t, 0.0, 0.0] for t in times])
        out = relations.distance_trend(track, [0.0, 0.0, 0.0], (0.0, 4.0))
        assert out.trend is Trend.RECEDING

    def test_static_person_stationary(self):
        times = [0.0, 0.5, 1.0, 1.5, 2.0]
        track = track_from_positions(times, [[2.0, 0.0, 0.0]] * 5)
        out = relations.distance_trend(track, [0.0, 0.0, 0.0], (0.0, 2.0))
        assert out.slope == 0.0
        assert out.trend is Trend.STATIONARY

    def test_small_drift_within_threshold(self):
        # distances 1.00..1.04 give slope 0.04, inside the +-0.05 band
        times = [0.0, 1.0, 2.0, 3.0, 4.0]
        track = track_from_positions(times, [[1.0 + 0.01 * t, 0.0, 0.0] for t in times])
        out = relations.distance_trend(track, [0.0, 0.0, 0.0], (0.0, 4.0))
        assert abs(out.slope - 0.04) < 1e-12
        assert out.trend is Trend.STATIONARY

    def test_matches_closed_form_five_point_formula(self):
        rng = np.random.default_rng(33)
        obj = np.zeros(3)
        for _ in range(50):
            times = np.sort(rng.uniform(0, 10, size=40))
            times[0], times[-1] = 0.0, 10.0
            positions = rng.uniform(-5, 5, size=(40, 3))
            track = track_from_positions(times, positions)
            out = relations.distance_trend(track, obj, (0.0, 10.0))
            ds = []
            for f in (0.0, 0.25, 0.5, 0.75, 1.0):
                target = 10.0 * f
                best = min(track, key=lambda e: (abs(e[0] - target), e[0]))
                ds.append(np.linalg.norm(best[1].translation - obj))
            expect = sum((x - 0.5) * d for x, d in zip((0.0, 0.25, 0.5, 0.75, 1.0), ds)) / 0.625
            assert abs(out.slope - expect) < 1e-12

    def test_midpoint_tie_resolves_to_earlier_entry(self):
        # samples at 0, .5, 1, 1.5, 2 land between entries at .5 and 1.5;
        # the earlier-entry rule gives distances (10, 10, 11, 11, 30)
        track = track_from_positions([0.0, 1.0, 2.0],
                                     [[10.0, 0.0, 0.0], [11.0, 0.0, 0.0], [30.0, 0.0, 0.0]])
        out = relations.distance_trend(track, [0.0, 0.0, 0.0], (0.0, 2.0))
        assert abs(out.slope - 16.4) < 1e-12

    def test_interval_not_covered(self):
        track = track_from_positions([0.0, 1.0], [[1, 0, 0], [2, 0, 0]])
        with pytest.raises(ValueError, match="cover"):
            relations.distance_trend(track, [0, 0, 0], (0.0, 2.0))

    def test_too_few_timestamps_inside_interval(self):
        track = track_from_positions([0.0, 1.0, 2.0], [[1, 0, 0], [2, 0, 0], [3, 0, 0]])
        with pytest.raises(ValueError, match="fewer than 2 distinct track timestamps"):
            relations.distance_trend(track, [0, 0, 0], (0.9, 1.1))

    def test_degenerate_interval(self):
        track = track_from_positions([0.0, 1.0], [[1, 0, 0], [2, 0, 0]])
        with pytest.raises(ValueError, match="exceed"):
            relations.distance_trend(track, [0, 0, 0], (1.0, 1.0))

    def test_threshold_boundaries(self):
        assert DistanceTrend.from_slope(0.05).trend is Trend.STATIONARY
        assert DistanceTrend.from_slope(-0.05).trend is Trend.STATIONARY
        assert DistanceTrend.from_slope(0.05 + 1e-9).trend is Trend.RECEDING
        assert DistanceTrend.from_slope(-0.05 - 1e-9).trend is Trend.APPROACHING
        assert DistanceTrend.from_slope(0.05 - 1e-9).trend is Trend.STATIONARY


class TestCloserThan:
    def test_clear_cases(self):
        p = geom.Pose.identity()
        assert relations.closer_than(p, [1, 0, 0], [2, 0, 0]) is Closer.A
        assert relations.closer_than(p, [3, 0, 0], [0, 0, 1]) is Closer.B

    def test_margin_boundary(self):
        # dyadic distances so the gap is exactly representable
        p = geom.Pose.identity()
        assert relations.closer_than(p, [1.0, 0, 0], [1.0625, 0, 0], margin=0.0625) is Closer.TIE
        assert relations.closer_than(p, [1.0, 0, 0], [1.0625 + 1e-9, 0, 0], margin=0.0625) is Closer.A
        assert relations.closer_than(p, [1.0, 0, 0], [1.02, 0, 0], margin=0.01) is Closer.A
        assert relations.closer_than(p, [1.0, 0, 0], [1.02, 0, 0]) is Closer.TIE  # default 0.05


class TestSameSide:
    def test_same_and_opposite(self):
        p = geom.Pose.identity()
        da, db, same = relations.same_side(p, [1.0, 0, 0.2], [1.0, 0, -0.2])
        assert same and da is Direction.RIGHT and db is Direction.RIGHT
        _, _, same = relations.same_side(p, [1.0, 0, 0], [-1.0, 0, 0])
        assert not same


class TestEstimateNavigation:
    def test_threshold_is_strict(self):
        p = geom.Pose.identity()
        at = relations.estimate_navigation(p, [0.0, 0.0, 1.5])
        assert not at.moved
        assert at.direction is None
        assert at.displacement == 1.5
        beyond = relations.estimate_navigation(p, [0.0, 0.0, 1.5 + 1e-9])
        assert beyond.moved
        assert beyond.direction is Direction.FRONT

    def test_direction_quantized_from_start_pose(self):
        p = geom.Pose.identity()
        assert relations.estimate_navigation(p, [3.0, 0.0, 0.0]).direction is Direction.RIGHT
        assert relations.estimate_navigation(p, [0.0, 0.0, -3.0]).direction is Direction.BACK

    def test_refiner_hook_is_applied(self):
        flips = lambda v: relations.NavigationVerdict(v.moved, v.displacement, Direction.LEFT)
        out = relations.estimate_navigation(geom.Pose.identity(), [3.0, 0.0, 0.0], refiner=flips)
        assert out.direction is Direction.LEFT

    def test_custom_threshold(self):
        p = geom.Pose.identity()
        assert relations.estimate_navigation(p, [0.0, 0.0, 1.0], threshold=0.5).moved


class TestHandProximity:
    def test_sides(self):
        p = geom.Pose.identity()
        assert relations.hand_proximity(p, [0.3, 0.1, 1.0]) is Hand.RIGHT
        assert relations.hand_proximity(p, [-0.3, 0.1, 1.0]) is Hand.LEFT

    def test_ambiguous_raises(self):
        p = geom.Pose.identity()
        with pytest.raises(ValueError, match="ambiguous hand"):
            relations.hand_proximity(p, [0.0, 0.2, 1.0])
        with pytest.raises(ValueError, match="ambiguous hand"):
            relations.hand_proximity(p, [1e-12, 0.2, 1.0])

    def test_follows_camera_frame_not_world(self):
        yaw180 = geom.Pose(np.diag([-1.0, 1.0, -1.0]), np.zeros(3))
        assert relations.hand_proximity(yaw180, [0.3, 0.0, 1.0]) is Hand.LEFT
