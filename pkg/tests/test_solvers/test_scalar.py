import numpy as np
import pytest

from garz_kit.core.exceptions import CFLViolationError, ValidationError
from garz_kit.models.grid import Grid, mass, total_variation
from garz_kit.models.state import build_initial_state
from garz_kit.models.velocity import VelocityModel
from garz_kit.solvers.scalar import (
    advance_density,
    cfl_dt,
    entropy_residual,
    godunov_flux,
    interface_marker,
    max_signal_speed,
    step_density,
)


class TestGodunovFlux:
    @pytest.mark.parametrize("left, right, expected", [
        (0.2, 0.8, 0.16),
        (0.8, 0.2, 0.25),
        (0.1, 0.3, 0.09),
        (0.3, 0.1, 0.21),
        (0.6, 0.9, 0.09),
        (0.4, 0.4, 0.24),
    ])
    def test_greenshields(self, model, left, right, expected):
        """Greenshields の Godunov 流束のテスト"""
        assert godunov_flux(left, right, 1.0, model) == pytest.approx(expected)

    def test_generic_branch_matches_unimodal(self, model):
        """臨界密度なしの一般分岐が一致するテスト"""
        generic = VelocityModel("generic", model.velocity_fn)
        rng = np.random.default_rng(7)
        left, right = rng.uniform(0.0, 1.0, 200), rng.uniform(0.0, 1.0, 200)
        u = rng.uniform(0.1, 2.0, 200)
        assert np.allclose(godunov_flux(left, right, u, generic), godunov_flux(left, right, u, model), atol=1e-10)

    def test_flux_is_non_negative(self, model):
        """流束が非負であるテスト"""
        rho = np.linspace(0.0, 1.0, 21)
        left, right = np.meshgrid(rho, rho)
        assert np.all(godunov_flux(left, right, 1.0, model) >= 0.0)


class TestAdvanceDensity:
    def test_interface_marker(self):
        """界面マーカーの平均とゴーストのテスト"""
        assert np.allclose(interface_marker(np.array([1.0, 2.0, 4.0])), [1.0, 1.5, 3.0, 4.0])

    def test_constant_state_preserved(self, constant_data, constant_grid, model):
        """定数状態が厳密に保たれるテスト"""
        state = build_initial_state(constant_data, constant_grid)
        rho_new, fluxes, diag = step_density(state, cfl_dt(state, model, 0.9), model)
        assert np.array_equal(rho_new.values, state.rho.values)
        assert diag.inflow == 0.0
        assert diag.mass_defect == pytest.approx(0.0, abs=1e-14)

    def test_mass_conservation_with_inflow(self, shock_data, riemann_grid, model):
        """境界流入を含めた質量保存のテスト"""
        state = build_initial_state(shock_data, riemann_grid)
        rho, u = state.rho, state.u
        total_inflow = 0.0
        for _ in range(20):
            rho, fluxes, _ = advance_density(rho, u, 0.5 * riemann_grid.h, model)
            total_inflow += fluxes.boundary_inflow
        assert mass(rho) - mass(state.rho) - total_inflow == pytest.approx(0.0, abs=1e-13)
        assert total_inflow == pytest.approx(20 * 0.5 * riemann_grid.h * (0.16 - 0.24))

    def test_total_variation_diminishing(self, model):
        """u 一定での TVD 性のテスト"""
        grid = Grid(-1.0, 1.0, 80)
        rng = np.random.default_rng(3)
        rho = grid.field(rng.uniform(0.0, 1.0, 80))
        u = grid.field(np.full(80, 1.0))
        tv = total_variation(rho)
        for _ in range(10):
            rho, _, _ = advance_density(rho, u, 0.9 * grid.h, model)
            assert total_variation(rho) <= tv + 1e-12
            tv = total_variation(rho)
        assert np.all(rho.values >= 0.0) and np.all(rho.values <= 1.0)

    def test_cfl_violation(self, constant_data, constant_grid, model):
        """CFL 条件違反のテスト"""
        state = build_initial_state(constant_data, constant_grid)
        with pytest.raises(CFLViolationError):
            step_density(state, 2.0 * constant_grid.h, model)

    def test_cfl_dt(self, constant_data, constant_grid, model):
        """CFL による時間刻みのテスト"""
        state = build_initial_state(constant_data, constant_grid)
        speed = max_signal_speed(state.rho.values, state.u.values, model)
        assert speed == pytest.approx(1.0)
        assert cfl_dt(state, model, 0.5) == pytest.approx(0.5 * constant_grid.h)
        assert cfl_dt(state, model, 0.5, remainder=1e-4) == 1e-4
        with pytest.raises(ValidationError):
            cfl_dt(state, model, 1.5)


class TestEntropyResidual:
    def test_interface_form_non_positive(self, shock_data, riemann_grid, model):
        """界面形式の残差が非正となるテスト"""
        state = build_initial_state(shock_data, riemann_grid)
        dt = 0.5 * riemann_grid.h
        rho_new, _, _ = step_density(state, dt, model)
        for k in np.linspace(0.0, 1.0, 11):
            residual = entropy_residual(state.rho, rho_new, state.u, float(k), dt, model, form="interface")
            assert np.max(residual.values) <= 1e-10

    def test_nonconstant_u(self, smoke_data, smoke_grid, model):
        """u が一定でない場合の界面形式のテスト"""
        state = build_initial_state(smoke_data, smoke_grid)
        dt = 0.4 * smoke_grid.h / 1.5
        rho_new, _, _ = step_density(state, dt, model)
        for k in (0.0, 0.3, 0.6, 1.0):
            residual = entropy_residual(state.rho, rho_new, state.u, k, dt, model, form="interface")
            assert np.max(residual.values) <= 1e-10

    def test_forms(self, shock_data, riemann_grid, model):
        """中心差分形式と不正な形式名のテスト"""
        state = build_initial_state(shock_data, riemann_grid)
        dt = 0.5 * riemann_grid.h
        rho_new, _, _ = step_density(state, dt, model)
        centered = entropy_residual(state.rho, rho_new, state.u, 0.4, dt, model, form="centered")
        interface = entropy_residual(state.rho, rho_new, state.u, 0.4, dt, model, form="interface")
        # constant u: both forms reduce to the same cell inequality
        assert np.allclose(centered.values, interface.values)
        with pytest.raises(ValidationError):
            entropy_residual(state.rho, rho_new, state.u, 0.4, dt, model, form="upwind")
