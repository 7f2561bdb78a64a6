import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import PressureError
from src.fields.analytic import make_standard_field
from src.fields.grid import GridField, leray_project, random_solenoidal, sample_on_grid
from src.fields.sampling import grad_sup_norm, sup_norm
from src.geometry.blocks import Block, block
from src.pressure.charges import charge_density, charge_density_grid
from src.pressure.coulomb import grad_pressure_coulomb, sphere_rule
from src.pressure.dyadic import (
    block_contribution,
    cumulative_charge_contribution,
    dipole_bound_check,
    dyadic_index,
    grad_pressure_blocks,
    theorem11_check,
)
from src.pressure.spectral import convective_grid, grad_pressure_spectral

points_strategy = st.lists(st.floats(min_value=-4.0, max_value=4.0), min_size=3, max_size=3)


class TestChargeDensity:

    @given(point=points_strategy)
    @settings(max_examples=30, deadline=None)
    def test_abc_closed_form(self, point):
        x, y, z = point
        expected = 2.0 * (np.cos(x) * np.sin(y) + np.sin(x) * np.cos(z) + np.cos(y) * np.sin(z))
        assert charge_density(make_standard_field("abc"), np.array(point)) == pytest.approx(expected, abs=1e-12)

    def test_grid_density_matches_closed_form(self, abc):
        grid = sample_on_grid(abc, 16)
        pts = np.moveaxis(grid.coordinates(), 0, -1)
        assert np.allclose(charge_density_grid(grid), charge_density(abc, pts), atol=1e-11)

    def test_sphere_rule_weights(self):
        dirs, weights = sphere_rule(12)
        assert np.sum(weights) == pytest.approx(4 * np.pi, rel=1e-13)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)


class TestSpectralPressure:

    def test_abc_pressure_balances_convection(self, abc):
        grid = sample_on_grid(abc, 32)
        gp = grad_pressure_spectral(grid)
        assert np.allclose(gp.u[:, 0, 0, 0], [-1.0, -1.0, -1.0], atol=1e-10)
        assert np.max(np.abs(gp.u + convective_grid(grid))) < 1e-10
        assert gp.meta["poisson_residual"] < 1e-9

    def test_taylor_green_pressure(self, taylor_green):
        gp = grad_pressure_spectral(sample_on_grid(taylor_green, 64))
        # node 8 of 64 sits at x = pi/4
        assert gp.u[0, 8, 0, 0] == pytest.approx(0.5, abs=1e-8)

    def test_refined_product_agrees(self, abc):
        grid = sample_on_grid(abc, 16)
        fine = grad_pressure_spectral(grid, refine=2)
        assert fine.n == 32
        assert np.allclose(fine.u[:, ::2, ::2, ::2], grad_pressure_spectral(grid).u, atol=1e-10)

    def test_constant_field_has_no_pressure(self):
        gp = grad_pressure_spectral(sample_on_grid(make_standard_field("constant"), 16))
        assert np.max(np.abs(gp.u)) < 1e-12

    def test_compressible_input_is_rejected(self):
        x = 2 * np.pi * np.arange(16) / 16
        X = np.meshgrid(x, x, x, indexing="ij")[0]
        u = np.zeros((3, 16, 16, 16))
        u[0] = np.sin(X)
        with pytest.raises(PressureError):
            grad_pressure_spectral(GridField(u=u))

    def test_bad_refinement(self, random_grid):
        with pytest.raises(PressureError):
            grad_pressure_spectral(random_grid, refine=0)


class TestFreeSpacePressure:

    def test_coulomb_matches_spectral_for_a_compact_swirl(self, swirl):
        report = grad_pressure_coulomb(swirl, np.zeros(3), r_excl=1e-4)
        grid = leray_project(sample_on_grid(swirl, 64, origin=-np.pi))
        gp = grad_pressure_spectral(grid)
        # node 32 of 64 is the origin
        spectral_value = gp.u[:, 32, 32, 32]
        scale = float(np.max(np.abs(gp.u)))
        assert np.allclose(report.grad_p, spectral_value, atol=1e-3 * scale)
        assert report.method == "coulomb"
        assert not report.truncation["truncated"]

    def test_block_sum_matches_coulomb(self, swirl):
        coulomb = grad_pressure_coulomb(swirl, np.zeros(3), r_excl=1e-4)
        blocks = grad_pressure_blocks(swirl, np.zeros(3), n_range=(-10, 1))
        scale = max(float(np.max(np.abs(coulomb.grad_p))), 1e-12)
        assert np.allclose(blocks.grad_p, coulomb.grad_p, atol=5e-3 * scale)
        assert blocks.truncation == {"n_min": -10, "n_max": 1, "depth": 0}

    def test_block_route_matches_spectral_first_component(self, swirl):
        check = theorem11_check(swirl, route="blocks", n_range=(-10, 1))
        grid = leray_project(sample_on_grid(swirl, 64, origin=-np.pi))
        spectral_d1 = grad_pressure_spectral(grid).u[0, 32, 32, 32]
        assert abs(check.extra["d1P0"]) == pytest.approx(abs(spectral_d1), rel=5e-2)

    def test_non_decaying_field_needs_acknowledgement(self, abc):
        with pytest.raises(PressureError):
            grad_pressure_coulomb(abc, np.zeros(3))
        with pytest.raises(PressureError):
            grad_pressure_coulomb(abc, np.zeros(3), r_outer=2.0)

    def test_truncated_support_needs_acknowledgement(self, swirl):
        with pytest.raises(PressureError):
            grad_pressure_coulomb(swirl, np.zeros(3), r_outer=0.5)
        report = grad_pressure_coulomb(swirl, np.zeros(3), r_outer=0.5, acknowledge_truncation=True)
        assert report.truncation["truncated"]

    def test_block_sum_needs_compact_support(self, abc):
        with pytest.raises(PressureError):
            grad_pressure_blocks(abc)


class TestDyadicDecomposition:

    def test_blocks_touching_the_origin_are_rejected(self, abc):
        with pytest.raises(PressureError):
            block_contribution(abc, Block.cylinder(-1.0, 1.0, 1.0))

    def test_dyadic_index(self):
        assert dyadic_index(3.0, 1.0) == 0
        assert dyadic_index(6.0, 1.0) == 1
        assert dyadic_index(7.0, 1.0) == 2
        assert dyadic_index(1.0, 1.0) == -1
        with pytest.raises(PressureError):
            dyadic_index(0.0, 1.0)

    def test_cumulative_route_matches_direct_integral(self, abc):
        result = cumulative_charge_contribution(abc, 0)
        direct = block_contribution(abc, block("C", 0))
        assert result["value"] == pytest.approx(direct, rel=1e-4)
        assert result["total_charge"] == pytest.approx(13.86, abs=5e-3)
        assert result["c1"] == pytest.approx(2.0 ** -3.5)
        assert result["c2"] == pytest.approx(1.0)

    def test_dipole_check_on_swirl(self, swirl):
        check = dipole_bound_check(swirl, block("C", -1), order=6)
        assert check.lemma == "2.5"
        assert check.ratio is not None and check.ratio >= 0.0
        assert check.extra["lhs_coarse"] >= 0.0

    def test_spectral_theorem_ratio_for_abc(self, abc):
        check = theorem11_check(sample_on_grid(abc, 16), route="spectral")
        assert check.ratio == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-10)
        assert check.refinement_stable
        assert check.extra["sup_u"] == pytest.approx(2.0)

    def test_coarse_ratio_comes_from_a_native_solve(self):
        # k_max = 5 on n = 16 puts part of u . grad u beyond the 2/3 cutoff
        grid = random_solenoidal(seed=4, k_max=5, n=16)
        check = theorem11_check(grid, route="spectral")
        native = float(np.max(np.abs(grad_pressure_spectral(grid, refine=1).u)))
        padded = float(np.max(np.abs(grad_pressure_spectral(grid, refine=2).u[:, ::2, ::2, ::2])))
        rhs_coarse = sup_norm(grid) * grad_sup_norm(grid)
        assert check.extra["ratio_coarse"] == pytest.approx(native / rhs_coarse, rel=1e-12)
        assert check.extra["ratio_coarse"] != pytest.approx(padded / rhs_coarse, rel=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_ratio_drift_under_grid_doubling(self, seed):
        grid = random_solenoidal(seed=seed, k_max=1, n=16)
        coarse = theorem11_check(grid, route="spectral").ratio
        fine = theorem11_check(grid.refined(32), route="spectral").ratio
        assert np.isfinite(coarse) and np.isfinite(fine)
        assert abs(fine - coarse) <= 0.05 * fine

    def test_theorem_routes_check_their_input(self, abc, random_grid):
        with pytest.raises(PressureError):
            theorem11_check(abc, route="spectral")
        with pytest.raises(PressureError):
            theorem11_check(random_grid, route="blocks")
        with pytest.raises(PressureError):
            theorem11_check(random_grid, route="fourier")
