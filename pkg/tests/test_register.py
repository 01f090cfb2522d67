import numpy as np
import pytest

from rea_forge import geom, register
from rea_forge.register import FrameDatabase, FrameEntry, RegistrationError


def random_pose(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return geom.Pose(geom.rotation_from_quat(q), rng.uniform(-4, 4, size=3))


def exact_provider_for(truth: dict):
    """Relative poses computed from ground-truth scene poses."""
    def provider(query_id, ref_id):
        return geom.compose(geom.inverse(truth[ref_id]), truth[query_id])
    return provider


def make_db(rng, n, dim=4):
    entries = [
        FrameEntry(f"f{i:03d}", rng.uniform(-1, 1, size=dim), random_pose(rng))
        for i in range(n)
    ]
    return FrameDatabase(entries)


class TestFrameDatabase:
    def test_duplicate_ids_rejected(self):
        rng = np.random.default_rng(50)
        e = FrameEntry("a", [1.0, 2.0], random_pose(rng))
        f = FrameEntry("a", [3.0, 4.0], random_pose(rng))
        with pytest.raises(ValueError, match="unique"):
            FrameDatabase([e, f])

    def test_descriptor_length_mismatch_rejected(self):
        rng = np.random.default_rng(51)
        e = FrameEntry("a", [1.0, 2.0], random_pose(rng))
        f = FrameEntry("b", [3.0], random_pose(rng))
        with pytest.raises(ValueError, match="length"):
            FrameDatabase([e, f])

    def test_empty_descriptor_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            FrameEntry("a", [], geom.Pose.identity())


class TestRetrieveNeighbors:
    def test_exact_match_comes_first(self):
        rng = np.random.default_rng(52)
        db = make_db(rng, 6)
        target = db.entries[3]
        out = register.retrieve_neighbors(db, target.descriptor, k=2)
        assert out[0].frame_id == target.frame_id

    def test_k_clamped_to_db_size(self):
        rng = np.random.default_rng(53)
        db = make_db(rng, 2)
        assert len(register.retrieve_neighbors(db, [0.0] * 4, k=5)) == 2

    def test_ties_resolve_by_ascending_frame_id(self):
        p = geom.Pose.identity()
        db = FrameDatabase([
            FrameEntry("zz", [1.0, 0.0], p),
            FrameEntry("aa", [1.0, 0.0], p),
            FrameEntry("mm", [1.0, 0.0], p),
        ])
        out = register.retrieve_neighbors(db, [0.0, 0.0], k=2)
        assert [e.frame_id for e in out] == ["aa", "mm"]

    def test_matches_brute_force_sort(self):
        rng = np.random.default_rng(54)
        db = make_db(rng, 15)
        q = rng.uniform(-1, 1, size=4)
        out = register.retrieve_neighbors(db, q, k=5)
        expect = sorted(
            db, key=lambda e: (np.linalg.norm(e.descriptor - q), e.frame_id)
        )[:5]
        assert [e.frame_id for e in out] == [e.frame_id for e in expect]

    def test_errors(self):
        rng = np.random.default_rng(55)
        db = make_db(rng, 3)
        with pytest.raises(ValueError, match="empty"):
            register.retrieve_neighbors(FrameDatabase([]), [0.0])
        with pytest.raises(ValueError, match="positive"):
            register.retrieve_neighbors(db, [0.0] * 4, k=0)
        with pytest.raises(ValueError, match="length"):
            register.retrieve_neighbors(db, [0.0] * 3)


class TestRegisterFrame:
    def test_exact_provider_recovers_ground_truth(self):
        rng = np.random.default_rng(56)
        truth = {f"f{i:03d}": random_pose(rng) for i in range(10)}
        truth["query"] = random_pose(rng)
        db = FrameDatabase([
            FrameEntry(fid, rng.uniform(-1, 1, size=5), pose)
            for fid, pose in truth.items() if fid != "query"
        ])
        out = register.register_frame(db, "query", rng.uniform(-1, 1, size=5),
                                      exact_provider_for(truth))
        expect = truth["query"]
        assert np.linalg.norm(out.pose.translation - expect.translation) < 1e-9
        assert geom.rotation_geodesic(out.pose.rotation, expect.rotation) < 1e-9
        assert out.discrepancy is not None
        assert out.discrepancy[0] < 1e-9 and out.discrepancy[1] < 1e-9

    def test_single_entry_db_reports_zero_discrepancy(self):
        rng = np.random.default_rng(57)
        truth = {"only": random_pose(rng), "q": random_pose(rng)}
        db = FrameDatabase([FrameEntry("only", [0.5, 0.5], truth["only"])])
        out = register.register_frame(db, "q", [0.1, 0.2], exact_provider_for(truth))
        assert out.discrepancy == (0.0, 0.0)
        assert np.allclose(out.pose.translation, truth["q"].translation, atol=1e-12)

    def test_identity_provider_yields_mean_of_neighbors(self):
        rng = np.random.default_rng(58)
        pa, pb = random_pose(rng), random_pose(rng)
        db = FrameDatabase([
            FrameEntry("a", [0.0, 0.0], pa),
            FrameEntry("b", [0.1, 0.0], pb),
            FrameEntry("c", [9.0, 9.0], random_pose(rng)),
        ])
        out = register.register_frame(db, "q", [0.0, 0.0], lambda q, r: geom.Pose.identity())
        expect = geom.mean_pose([pa, pb])
        assert np.allclose(out.pose.translation, expect.translation, atol=1e-12)
        assert np.allclose(out.pose.rotation, expect.rotation, atol=1e-12)
        t_gap, r_gap = out.discrepancy
        assert abs(t_gap - np.linalg.norm(pa.translation - pb.translation)) < 1e-12
        assert abs(r_gap - geom.rotation_geodesic(pa.rotation, pb.rotation)) < 1e-12

    def test_partial_failure_uses_survivor_and_hides_discrepancy(self):
        rng = np.random.default_rng(59)
        truth = {"a": random_pose(rng), "b": random_pose(rng), "q": random_pose(rng)}
        db = FrameDatabase([
            FrameEntry("a", [0.0, 0.0], truth["a"]),
            FrameEntry("b", [0.1, 0.0], truth["b"]),
        ])
        exact = exact_provider_for(truth)
        flaky = lambda q, r: None if r == "a" else exact(q, r)
        out = register.register_frame(db, "q", [0.0, 0.0], flaky)
        assert out.discrepancy is None
        assert np.allclose(out.pose.translation, truth["q"].translation, atol=1e-9)

    def test_total_failure_raises(self):
        rng = np.random.default_rng(60)
        db = make_db(rng, 3)
        with pytest.raises(RegistrationError, match="registration failed"):
            register.register_frame(db, "q", [0.0] * 4, lambda q, r: None)

    def test_invariant_under_database_order(self):
        rng = np.random.default_rng(61)
        truth = {f"f{i:03d}": random_pose(rng) for i in range(8)}
        truth["q"] = random_pose(rng)
        descs = {fid: rng.uniform(-1, 1, size=3) for fid in truth if fid != "q"}
        entries = [FrameEntry(fid, descs[fid], truth[fid]) for fid in descs]
        provider = exact_provider_for(truth)
        query_desc = rng.uniform(-1, 1, size=3)
        base = register.register_frame(FrameDatabase(entries), "q", query_desc, provider)
        flipped = register.register_frame(FrameDatabase(entries[::-1]), "q", query_desc, provider)
        assert np.array_equal(base.pose.translation, flipped.pose.translation)
        assert np.array_equal(base.pose.rotation, flipped.pose.rotation)
        assert base.neighbor_ids == flipped.neighbor_ids


class TestDatabaseJson:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(62)
        db = make_db(rng, 5)
        path = tmp_path / "db.json"
        register.save_database(db, path)
        back = register.load_database(path)
        assert len(back) == 5
        for a, b in zip(db, back):
            assert a.frame_id == b.frame_id
            assert np.allclose(a.descriptor, b.descriptor, atol=0)
            assert np.allclose(a.pose.rotation, b.pose.rotation, atol=1e-15)
            assert np.allclose(a.pose.translation, b.pose.translation, atol=0)

    def test_schema_shape(self, tmp_path):
        rng = np.random.default_rng(63)
        db = make_db(rng, 2, dim=3)
        path = tmp_path / "db.json"
        register.save_database(db, path)
        import json
        payload = json.loads(path.read_text())
        assert set(payload) == {"entries"}
        entry = payload["entries"][0]
        assert set(entry) == {"frame_id", "descriptor", "pose"}
        assert set(entry["pose"]) == {"rotation", "translation"}
        assert len(entry["pose"]["rotation"]) == 9
        assert len(entry["pose"]["translation"]) == 3

    def test_malformed_file_raises(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"nope\": []}")
        with pytest.raises(ValueError, match="malformed frame database"):
            register.load_database(path)
        path.write_text("not json")
        with pytest.raises(ValueError, match="malformed frame database"):
            register.load_database(path)
