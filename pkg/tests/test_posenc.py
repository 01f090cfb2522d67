import numpy as np
import pytest

from rea_forge import geom, posenc
from rea_forge.cloud import PointCloud
from rea_forge.posenc import AffineProjection, FourierParams, RayGrid


INTR = geom.Intrinsics(fx=90.0, fy=80.0, cx=32.0, cy=24.0, width=64, height=48)


class TestPixelRayGrid:
    def test_single_pixel_principal_center(self):
        intr = geom.Intrinsics(fx=1.0, fy=1.0, cx=0.5, cy=0.5, width=1, height=1)
        grid = posenc.pixel_ray_grid(intr, 1, 1)
        assert np.allclose(grid.rays[0, 0], [0.0, 0.0, 1.0])

    def test_matches_scalar_pixel_ray(self):
        grid = posenc.pixel_ray_grid(INTR, INTR.height, INTR.width)
        rng = np.random.default_rng(70)
        for _ in range(50):
            u = int(rng.integers(0, INTR.width))
            v = int(rng.integers(0, INTR.height))
            assert np.allclose(grid.rays[v, u], geom.pixel_ray(INTR, u, v), atol=1e-15)

    def test_unit_norms(self):
        grid = posenc.pixel_ray_grid(INTR, 48, 64)
        norms = np.linalg.norm(grid.rays, axis=2)
        assert np.abs(norms - 1.0).max() < 1e-12

    def test_bad_dims(self):
        with pytest.raises(ValueError, match=">= 1"):
            posenc.pixel_ray_grid(INTR, 0, 5)


class TestPoolRayGrid:
    def test_identity_pool(self):
        grid = posenc.pixel_ray_grid(INTR, 12, 16)
        out = posenc.pool_ray_grid(grid, 12, 16)
        assert np.array_equal(out.rays, grid.rays)

    def test_constant_grid_stays_constant(self):
        rays = np.tile([0.0, 0.6, 0.8], (9, 12, 1))
        out = posenc.pool_ray_grid(RayGrid(rays), 3, 4)
        assert np.allclose(out.rays, [0.0, 0.6, 0.8], atol=1e-15)

    def test_four_by_four_block_means(self):
        # distinct rays r[i, j] = (i, j, 10 i + j); 2x2 block means by hand
        rays = np.empty((4, 4, 3))
        ii, jj = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
        rays[:, :, 0] = ii
        rays[:, :, 1] = jj
        rays[:, :, 2] = 10 * ii + jj
        out = posenc.pool_ray_grid(RayGrid(rays), 2, 2)
        assert np.allclose(out.rays[0, 0], [0.5, 0.5, 5.5])
        assert np.allclose(out.rays[0, 1], [0.5, 2.5, 7.5])
        assert np.allclose(out.rays[1, 0], [2.5, 0.5, 25.5])
        assert np.allclose(out.rays[1, 1], [2.5, 2.5, 27.5])

    def test_floor_boundaries_on_uneven_split(self):
        # 5 rows -> 2 bins: rows [0,2) and [2,5)
        rays = np.zeros((5, 1, 3))
        rays[:, 0, 0] = [1.0, 2.0, 3.0, 4.0, 5.0]
        out = posenc.pool_ray_grid(RayGrid(rays), 2, 1)
        assert np.allclose(out.rays[:, 0, 0], [1.5, 4.0])

    def test_no_renormalization_by_default(self):
        # opposing unit rays average to a strictly shorter vector
        rays = np.zeros((1, 2, 3))
        rays[0, 0] = [1.0, 0.0, 0.0]
        rays[0, 1] = [0.0, 1.0, 0.0]
        out = posenc.pool_ray_grid(RayGrid(rays), 1, 1)
        assert np.allclose(out.rays[0, 0], [0.5, 0.5, 0.0])
        assert np.linalg.norm(out.rays[0, 0]) < 1.0

    def test_renormalize_flag(self):
        grid = posenc.pixel_ray_grid(INTR, 48, 64)
        out = posenc.pool_ray_grid(grid, 6, 8, renormalize=True)
        norms = np.linalg.norm(out.rays, axis=2)
        assert np.abs(norms - 1.0).max() < 1e-12

    def test_pooled_norm_never_exceeds_one_for_unit_input(self):
        grid = posenc.pixel_ray_grid(INTR, 48, 64)
        out = posenc.pool_ray_grid(grid, 5, 7)
        assert np.linalg.norm(out.rays, axis=2).max() <= 1.0 + 1e-12

    def test_bad_target_dims(self):
        grid = posenc.pixel_ray_grid(INTR, 8, 8)
        for oh, ow in [(0, 4), (9, 4), (4, 0), (4, 9)]:
            with pytest.raises(ValueError, match="pooled dimensions"):
                posenc.pool_ray_grid(grid, oh, ow)


class TestPointCloudRays:
    def test_simple_directions(self):
        pc = PointCloud(np.array([[0.0, 0.0, 5.0], [3.0, 0.0, 0.0]]), np.full((2, 3), 0.5))
        rays, dropped = posenc.point_cloud_rays(pc, geom.Pose.identity())
        assert dropped == 0
        assert np.allclose(rays[0], [0.0, 0.0, 1.0])
        assert np.allclose(rays[1], [1.0, 0.0, 0.0])

    def test_origin_point_excluded_and_counted(self):
        pc = PointCloud(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [1e-12, 0.0, 0.0]]),
                        np.full((3, 3), 0.5))
        rays, dropped = posenc.point_cloud_rays(pc, geom.Pose.identity())
        assert dropped == 2
        assert rays.shape == (1, 3)

    def test_matches_homogeneous_oracle(self):
        rng = np.random.default_rng(71)
        pts = rng.uniform(-5, 5, size=(100, 3))
        pc = PointCloud(pts, np.full((100, 3), 0.5))
        q = rng.normal(size=4)
        pose = geom.Pose(geom.rotation_from_quat(q / np.linalg.norm(q)),
                         rng.uniform(-2, 2, size=3))
        rays, dropped = posenc.point_cloud_rays(pc, pose)
        assert dropped == 0
        m = np.eye(4)
        m[:3, :3] = pose.rotation
        m[:3, 3] = pose.translation
        inv = np.linalg.inv(m)
        for i, p in enumerate(pts):
            cam = (inv @ [*p, 1.0])[:3]
            assert np.allclose(rays[i], cam / np.linalg.norm(cam), atol=1e-9)

    def test_unit_norms(self):
        rng = np.random.default_rng(72)
        pc = PointCloud(rng.uniform(-4, 4, size=(200, 3)), np.full((200, 3), 0.5))
        rays, _ = posenc.point_cloud_rays(pc, geom.Pose.identity())
        assert np.abs(np.linalg.norm(rays, axis=1) - 1.0).max() < 1e-12


class TestFourierEncode:
    def test_single_octave_axis_ray(self):
        out = posenc.fourier_encode(np.array([1.0, 0.0, 0.0]), FourierParams(1))
        assert np.allclose(out, [0.0, -1.0, 0.0, 1.0, 0.0, 1.0], atol=1e-12)

    def test_zero_ray(self):
        out = posenc.fourier_encode(np.zeros(3), FourierParams(4))
        assert np.array_equal(out, np.tile([0.0, 1.0], 12))

    def test_component_major_octave_layout(self):
        r = np.array([0.3, -0.5, 0.7])
        out = posenc.fourier_encode(r, FourierParams(2))
        expect = []
        for c in r:
            for l in range(2):
                expect.extend([np.sin((2 ** l) * np.pi * c), np.cos((2 ** l) * np.pi * c)])
        assert np.allclose(out, expect, atol=1e-15)

    def test_output_dim_and_bounds(self):
        rng = np.random.default_rng(73)
        rays = rng.normal(size=(50, 3))
        rays /= np.linalg.norm(rays, axis=1, keepdims=True)
        out = posenc.fourier_encode(rays, FourierParams(10))
        assert out.shape == (50, 60)
        assert np.abs(out).max() <= 1.0

    def test_no_collisions_on_random_unit_rays(self):
        rng = np.random.default_rng(74)
        rays = rng.normal(size=(10_000, 3))
        rays /= np.linalg.norm(rays, axis=1, keepdims=True)
        out = posenc.fourier_encode(rays, FourierParams(10))
        assert np.unique(out, axis=0).shape[0] == 10_000

    def test_batch_matches_single(self):
        rng = np.random.default_rng(75)
        rays = rng.normal(size=(7, 3))
        batch = posenc.fourier_encode(rays, FourierParams(3))
        for i in range(7):
            assert np.array_equal(batch[i], posenc.fourier_encode(rays[i], FourierParams(3)))

    def test_bad_shape(self):
        with pytest.raises(ValueError, match="final dimension"):
            posenc.fourier_encode(np.zeros((4, 2)), FourierParams(1))

    def test_params_validation(self):
        with pytest.raises(ValueError, match=">= 1"):
            FourierParams(0)


class TestFusePosition:
    def test_zero_projection_is_identity(self):
        rng = np.random.default_rng(76)
        feats = rng.normal(size=(6, 16))
        rays = rng.normal(size=(6, 3))
        params = FourierParams(2)
        out = posenc.fuse_position(feats, rays, params, AffineProjection.zeros(16, params))
        assert np.array_equal(out, feats)

    def test_matches_direct_affine_map(self):
        rng = np.random.default_rng(77)
        params = FourierParams(3)
        feats = rng.normal(size=(5, 8))
        rays = rng.normal(size=(5, 3))
        w = rng.normal(size=(8, params.output_dim))
        b = rng.normal(size=8)
        out = posenc.fuse_position(feats, rays, params, AffineProjection(w, b))
        gamma = posenc.fourier_encode(rays, params)
        expect = feats + gamma @ w.T + b
        assert np.allclose(out, expect, atol=1e-12)

    def test_additive_in_features(self):
        rng = np.random.default_rng(78)
        params = FourierParams(2)
        rays = rng.normal(size=(4, 3))
        proj = AffineProjection(rng.normal(size=(6, params.output_dim)), rng.normal(size=6))
        f1 = rng.normal(size=(4, 6))
        f2 = rng.normal(size=(4, 6))
        a = posenc.fuse_position(f1, rays, params, proj)
        b = posenc.fuse_position(f2, rays, params, proj)
        assert np.allclose(a - f1, b - f2, atol=1e-12)

    def test_shape_validation(self):
        params = FourierParams(2)
        proj = AffineProjection.zeros(4, params)
        with pytest.raises(ValueError, match="aligned"):
            posenc.fuse_position(np.zeros((3, 4)), np.zeros((2, 3)), params, proj)
        with pytest.raises(ValueError, match="weights"):
            posenc.fuse_position(np.zeros((3, 5)), np.zeros((3, 3)), params, proj)
        with pytest.raises(ValueError, match="bias"):
            AffineProjection(np.zeros((4, 12)), np.zeros(3))


class TestFeatureDump:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(79)
        feats = rng.normal(size=(17, 60)).astype(np.float32).astype(float)
        path = tmp_path / "f.bin"
        posenc.write_features(path, feats)
        back = posenc.read_features(path)
        assert np.array_equal(back, feats)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "f.bin"
        posenc.write_features(path, np.zeros((3, 5)))
        raw = path.read_bytes()
        assert len(raw) == 8 + 3 * 5 * 4
        import struct
        assert struct.unpack_from("<II", raw) == (3, 5)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "f.bin"
        posenc.write_features(path, np.ones((2, 2)))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ValueError, match="size"):
            posenc.read_features(path)

    def test_short_header_rejected(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"\x01\x00")
        with pytest.raises(ValueError, match="header"):
            posenc.read_features(path)
