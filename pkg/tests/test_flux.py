import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j1

from src.errors import FluxError
from src.fields.analytic import make_standard_field
from src.flux.checks import (
    block_charge,
    charge_bound_check,
    is_stable,
    level_cap_flux_check,
    level_fractions,
    rectangle_bound_check,
    surface_bound_check,
    surface_sampler,
)
from src.flux.convective import (
    convective_flux,
    rectangle_flux_decomposition,
    riemann_surface_flux,
    unrolled_cylinder_flux,
)
from src.geometry.blocks import Block, block
from src.geometry.influence import h_range_on_block
from src.geometry.quadrature import riemann_volume_sum, volume_quadrature
from src.geometry.surfaces import CylinderSegment, Disc, Rectangle

ABC_CHARGE_C0 = 2.0 * (np.cos(1.0) - np.cos(2.0)) * 4.0 * np.pi * j1(2.0)


def charge_density(fld):
    """-d_i u_j d_j u_i at each point."""
    def q(pts):
        g = fld.grad(pts)
        return -np.einsum("nij,nji->n", g, g)

    return q


class TestConvectiveFlux:

    def test_orientation_flips_sign(self, abc):
        disc = Disc(0.4, 1.3)
        assert convective_flux(abc, disc.reversed()) == pytest.approx(-convective_flux(abc, disc), rel=1e-14)

    def test_agrees_with_riemann_sum_on_a_disc(self, abc):
        disc = Disc(0.3, 1.0)
        reference = riemann_surface_flux(abc, disc, cells=(400, 400))
        assert convective_flux(abc, disc) == pytest.approx(reference, rel=1e-4)

    def test_unrolled_cylinder_matches(self, abc):
        cyl = CylinderSegment(0.5, 1.5, 0.8)
        assert unrolled_cylinder_flux(abc, cyl) == pytest.approx(convective_flux(abc, cyl), rel=1e-9)

    @given(corner=st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=3, max_size=3),
           axis=st.integers(min_value=0, max_value=2))
    @settings(max_examples=15, deadline=None)
    def test_rectangle_decomposition_closes(self, corner, axis):
        fld = make_standard_field("abc")
        rect = Rectangle.axis_aligned(corner, 1.0, 0.7, normal_axis=axis)
        parts = rectangle_flux_decomposition(fld, rect)
        scale = max(1.0, abs(parts["flux"]), abs(parts["normal_term"]))
        assert abs(parts["residual"]) < 1e-9 * scale


class TestBlockCharges:

    def test_abc_charge_on_first_cylinder(self, abc):
        assert block_charge(abc, block("C", 0)) == pytest.approx(ABC_CHARGE_C0, rel=1e-6)
        assert ABC_CHARGE_C0 == pytest.approx(13.86, abs=5e-3)

    @pytest.mark.parametrize("shift", [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0], [10.0, 0.0, 0.0]])
    def test_charge_is_frame_independent(self, abc, shift):
        assert block_charge(abc, block("C", 0), shift=shift) == pytest.approx(ABC_CHARGE_C0, rel=1e-7)

    def test_charges_add_over_adjacent_cylinders(self, taylor_green):
        zero = np.zeros(3)
        left = block_charge(taylor_green, Block.cylinder(1.0, 2.0, 1.5), shift=zero)
        right = block_charge(taylor_green, Block.cylinder(2.0, 3.0, 1.5), shift=zero)
        whole = block_charge(taylor_green, Block.cylinder(1.0, 3.0, 1.5), shift=zero)
        assert left + right == pytest.approx(whole, rel=1e-8, abs=1e-12)

    @pytest.mark.parametrize("blk", [block("C", 0), block("B", 0, depth=1), Block.cylinder(-0.5, 0.7, 1.2)])
    def test_divergence_theorem(self, abc, blk):
        volume = volume_quadrature(blk, order=10, resolution=0.5).integrate(charge_density(abc))
        assert block_charge(abc, blk) == pytest.approx(volume, rel=1e-8, abs=1e-10)

    def test_riemann_volume_reference(self, abc):
        blk = block("C", 0)
        reference = riemann_volume_sum(charge_density(abc), blk, cells=(64, 64, 64))
        assert block_charge(abc, blk) == pytest.approx(reference, rel=1e-3)

    def test_scale_covariance(self, abc):
        stretched = block_charge(abc.rescaled(2.0), block("C", 1))
        assert stretched == pytest.approx(2.0 * block_charge(abc, block("C", 0)), rel=1e-6)

    def test_compact_swirl_charge_vanishes_far_away(self, swirl):
        assert block_charge(swirl, block("C", 2)) == 0.0


class TestBoundChecks:

    def test_constant_field_is_vacuous(self):
        fld = make_standard_field("constant")
        rect = Rectangle.axis_aligned([0.0, 0.0, 0.0], 1.0, 1.0)
        check = rectangle_bound_check(fld, rect, surface_sampler(rect, 64), order=4)
        assert check.vacuous
        assert check.ratio == 0.0
        assert check.refinement_stable

    def test_shift_never_increases_the_ratio(self, abc):
        rect = Rectangle.axis_aligned([0.2, -0.4, 0.1], 0.8, 0.5, normal_axis=0)
        check = rectangle_bound_check(abc, rect, surface_sampler(rect, 256), order=6, optimize_shift=True)
        assert check.extra["shift"] in ("none", "mean", "centre")
        assert check.ratio <= check.extra["ratio_raw"] + 1e-15

    def test_surface_check_on_disc(self, abc):
        check = surface_bound_check(abc, Disc(0.5, 1.0), order=8)
        assert check.lemma == "2.2"
        assert check.ratio is not None and check.ratio > 0
        assert check.refinement_stable

    def test_surface_check_rejects_rectangles(self, abc):
        with pytest.raises(FluxError):
            surface_bound_check(abc, Rectangle.axis_aligned([0, 0, 0], 1.0, 1.0))

    def test_charge_check(self, abc):
        check = charge_bound_check(abc, block("C", 0), order=8)
        assert check.lhs == pytest.approx(abs(ABC_CHARGE_C0), rel=1e-6)
        assert check.rhs_factor == pytest.approx(check.extra["w"] ** 2)
        assert check.refinement_stable

    def test_shell_check_reports_truncation_face(self, abc):
        check = charge_bound_check(abc, block("B", 0, depth=1), order=6)
        assert check.extra["truncation_face_flux"] >= 0.0
        assert check.extra["tail_bound_factor"] > 0.0

    def test_level_cap_zones_sum_to_total(self, abc):
        check = level_cap_flux_check(abc, 0, 0.5, order=12)
        zones = check.extra["zones"]
        assert set(zones) == {"axial", "middle", "equatorial"}
        assert abs(sum(zones.values())) == pytest.approx(check.extra["lhs_coarse"], rel=1e-4, abs=1e-10)

    def test_level_outside_range(self, abc):
        with pytest.raises(FluxError):
            level_cap_flux_check(abc, 0, 2.0)

    def test_level_fractions_stay_inside_range(self):
        lo, hi = h_range_on_block(block("C", 1))
        levels = level_fractions(1, 5)
        assert len(levels) == 5
        assert all(lo < x < hi for x in levels)

    def test_stability_rule(self):
        assert is_stable(1.0, 1.01, 0.0, tol=0.05)
        assert not is_stable(1.0, 1.2, 0.0, tol=0.05)
        assert is_stable(1e-16, -1e-16, 1e-14, tol=0.05)
