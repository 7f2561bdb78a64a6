import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import GeometryError
from src.geometry.blocks import Block, block, dyadic_family
from src.geometry.influence import (
    THETA_TANGENT,
    clip_level_cap,
    h_range_on_block,
    h_value,
    level_cap_zones,
    level_intersections,
    rescale_to_level,
)
from src.geometry.quadrature import (
    riemann_volume_sum,
    surface_area,
    surface_nodes,
    surface_quadrature,
    volume_quadrature,
)
from src.geometry.surfaces import CylinderSegment, Disc, LevelCap


def grad_h(x):
    norm = np.linalg.norm(x, axis=-1)[..., None]
    e1 = np.zeros_like(x)
    e1[..., 0] = 1.0
    return e1 / norm ** 3 - 3.0 * x[..., :1] * x / norm ** 5


class TestInfluenceFunction:

    def test_values(self):
        assert h_value([1.0, 0.0, 0.0]) == 1.0
        assert h_value([2.0, 0.0, 0.0]) == 0.25
        assert h_value([0.0, 3.0, 4.0]) == 0.0
        assert h_value([-1.0, 0.0, 0.0]) == -1.0

    def test_origin_is_rejected(self):
        with pytest.raises(GeometryError):
            h_value(np.zeros(3))

    @given(s=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=25, deadline=None)
    def test_homogeneous_of_degree_minus_two(self, s):
        x = np.array([0.7, -0.4, 1.3])
        assert h_value(s * x) == pytest.approx(h_value(x) / s ** 2, rel=1e-12)

    def test_range_on_first_cylinder(self):
        lo, hi = h_range_on_block(block("C", 0))
        assert lo == pytest.approx(2.0 ** -3.5, rel=1e-12)
        assert hi == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("n", [-3, -1, 2, 4])
    def test_range_scales_with_level(self, n):
        lo0, hi0 = h_range_on_block(block("C", 0))
        lo, hi = h_range_on_block(block("C", n))
        assert lo == pytest.approx(lo0 * 4.0 ** -n, rel=1e-12)
        assert hi == pytest.approx(hi0 * 4.0 ** -n, rel=1e-12)

    def test_range_bounds_sampled_values(self):
        blk = block("B", 0, depth=1)
        lo, hi = h_range_on_block(blk)
        rng = np.random.default_rng(2)
        x1 = rng.uniform(blk.x1_lo, blk.x1_hi, 2000)
        r = rng.uniform(blk.r_in, blk.r_out, 2000)
        h = h_value(np.column_stack([x1, r, np.zeros_like(r)]))
        assert np.all(h >= lo - 1e-12) and np.all(h <= hi + 1e-12)


class TestLevelCaps:

    def test_points_lie_on_the_level_set(self):
        cap = LevelCap(0.3, 0.0, 1.4)
        s, t = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 7), indexing="ij")
        assert np.allclose(h_value(cap.point(s, t)), 0.3, rtol=1e-12)

    def test_normal_follows_increasing_h(self):
        cap = LevelCap(0.5, 0.05, 1.5)
        s, t = np.meshgrid(np.linspace(0, 1, 11), np.linspace(0, 1, 5), indexing="ij")
        g = grad_h(cap.point(s, t))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        assert np.allclose(np.sum(g * cap.normal(s, t), axis=-1), 1.0, atol=1e-12)
        assert np.allclose(np.sum(g * cap.reversed().normal(s, t), axis=-1), -1.0, atol=1e-12)

    def test_tangent_is_axial_at_the_turning_angle(self):
        cap = LevelCap(1.0, THETA_TANGENT - 0.1, THETA_TANGENT + 0.1)
        ds, _ = cap.tangents(0.5, 0.0)
        assert abs(ds[1]) < 1e-12 * np.linalg.norm(ds)

    def test_turning_angle_is_not_forty_five_degrees(self):
        assert np.degrees(THETA_TANGENT) == pytest.approx(54.7356, abs=1e-4)
        ds, _ = LevelCap(1.0, np.pi / 4 - 0.1, np.pi / 4 + 0.1).tangents(0.5, 0.0)
        assert abs(ds[1]) > 0.1 * np.linalg.norm(ds)

    def test_rescaling_moves_between_levels(self):
        pts = LevelCap(1.0, 0.0, 1.2).point(np.linspace(0, 1, 13), 0.25)
        assert np.allclose(h_value(rescale_to_level(pts, 1.0, 4.0)), 4.0, rtol=1e-12)

    def test_bad_levels(self):
        with pytest.raises(GeometryError):
            LevelCap(-1.0, 0.0, 1.0)
        with pytest.raises(GeometryError):
            LevelCap(1.0, 1.0, 0.5)
        with pytest.raises(GeometryError):
            clip_level_cap(0.0, block("C", 0))

    @pytest.mark.parametrize("xlev", [0.1, 0.3, 0.6, 0.95])
    def test_clipped_caps_stay_inside_the_block(self, xlev):
        blk = block("C", 0)
        caps = clip_level_cap(xlev, blk)
        assert caps
        s, t = np.meshgrid(np.linspace(0.05, 0.95, 10), np.linspace(0, 1, 6), indexing="ij")
        for cap in caps:
            assert np.all(blk.contains(cap.point(s, t)))

    def test_zones_partition_the_caps(self):
        caps = clip_level_cap(0.2, block("B", 0, depth=0)) + clip_level_cap(0.2, block("C", 0))
        zones = level_cap_zones(caps)
        total = sum(c.theta_hi - c.theta_lo for c in caps)
        assert sum(c.theta_hi - c.theta_lo for group in zones.values() for c in group) == pytest.approx(total)
        assert all(c.theta_hi <= np.pi / 6 + 1e-15 for c in zones["axial"])
        assert all(c.theta_lo >= np.pi / 3 - 1e-15 for c in zones["equatorial"])

    def test_intersection_circles_lie_on_the_level(self):
        circles = level_intersections(0.5, block("C", 0))
        assert circles
        for x1, r in circles:
            assert h_value([x1, r, 0.0]) == pytest.approx(0.5, rel=1e-9)


class TestBlocks:

    def test_cylinder_boundary_area(self):
        for n in (-1, 0, 2):
            blk = block("C", n)
            area = sum(surface_area(face) for face in blk.boundary)
            expected = 2 * np.pi * 4.0 ** (n + 1) + 2 * np.pi * 2.0 ** (n + 1) * 2.0 ** n
            assert area == pytest.approx(expected, rel=1e-12)

    def test_disc_area(self):
        assert surface_area(Disc(0.0, 2.0)) == pytest.approx(4 * np.pi, rel=1e-13)

    def test_mirror_cylinder(self):
        blk = block("C", 1, side=-1)
        assert (blk.x1_lo, blk.x1_hi, blk.r_out) == (-4.0, -2.0, 4.0)
        assert blk.label == "C_1-"

    def test_shallow_blocks_have_bounded_diameter(self):
        for n in (-2, 0, 3):
            assert block("C", n).diameter <= 2.0 ** (n + 3)
            for depth in (0, 1, 2):
                assert block("B", n, depth=depth).diameter <= 2.0 ** (n + 3)

    def test_unshifted_family_tiles_space(self):
        family = dyadic_family(-6, 5, depth=0)
        pts = np.random.default_rng(4).normal(scale=4.0, size=(4000, 3))
        r = np.hypot(pts[:, 1], pts[:, 2])
        reach = np.maximum(np.abs(pts[:, 0]), r)
        pts = pts[(reach > 2.0 ** -6) & (reach < 2.0 ** 6)]
        counts = sum(blk.contains(pts).astype(int) for blk in family)
        assert np.all(counts == 1)

    def test_bad_requests(self):
        with pytest.raises(GeometryError):
            block("D", 0)
        with pytest.raises(GeometryError):
            block("C", 0.5)
        with pytest.raises(GeometryError):
            block("C", 0, side=2)
        with pytest.raises(GeometryError):
            block("B", 0, depth=-1)
        with pytest.raises(GeometryError):
            Block.cylinder(2.0, 1.0, 1.0)


class TestQuadrature:

    @pytest.mark.parametrize("blk", [block("C", 0), block("B", -1, depth=2), Block.cylinder(-1.0, 0.5, 0.75)])
    def test_volume_rule_integrates_one(self, blk):
        rule = volume_quadrature(blk, order=4)
        assert rule.integrate(lambda p: np.ones(p.shape[0])) == pytest.approx(blk.volume, rel=1e-12)

    def test_gauss_agrees_with_riemann_sum(self):
        blk = block("C", 0)

        def fn(p):
            return p[:, 0] ** 2 + p[:, 1] ** 2 + np.cos(p[:, 2])

        gauss = volume_quadrature(blk, order=8).integrate(fn)
        assert riemann_volume_sum(fn, blk, cells=(64, 64, 64)) == pytest.approx(gauss, rel=1e-3)

    def test_clipping_drops_empty_blocks(self):
        rule = volume_quadrature(block("C", 3), clip_radius=2.0)
        assert rule.size == 0 and rule.integrate(lambda p: np.ones(p.shape[0])) == 0.0

    def test_rule_is_tied_to_its_surface_kind(self):
        rule = surface_quadrature(Disc(0.0, 1.0), order=4)
        with pytest.raises(GeometryError):
            surface_nodes(CylinderSegment(0.0, 1.0, 1.0), rule)

    def test_bad_order(self):
        with pytest.raises(GeometryError):
            surface_quadrature(Disc(0.0, 1.0), order=0)
