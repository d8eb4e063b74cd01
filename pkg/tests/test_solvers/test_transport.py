import numpy as np
import pytest

from garz_kit.core.exceptions import FluxMismatchError
from garz_kit.models.grid import Grid, InterfaceFluxes, c0_distance, l1_distance, mass
from garz_kit.models.state import build_initial_state
from garz_kit.solvers.scalar import advance_density, step_density
from garz_kit.solvers.transport import differentiate, extract_ratio, reconstruct, step_marker


@pytest.fixture
def grid():
    return Grid(0.0, 1.0, 4)


class TestStepMarker:
    def test_constant_ratio_is_preserved(self, smoke_data, smoke_grid, model):
        """比 q/rho が一定なら更新後も一定であるテスト"""
        state = build_initial_state(smoke_data, smoke_grid)
        dt = 0.4 * smoke_grid.h / 1.5
        rho_new, fluxes, _ = step_density(state, dt, model)
        q = state.rho.with_values(0.3 * state.rho.values)

        q_new = step_marker(q, state.rho, fluxes, dt)
        assert np.allclose(q_new.values, 0.3 * rho_new.values, atol=1e-14)

    def test_marker_mass_balance(self, smoke_data, smoke_grid, model):
        """マーカー質量の保存のテスト"""
        state = build_initial_state(smoke_data, smoke_grid)
        dt = 0.4 * smoke_grid.h / 1.5
        _, fluxes, _ = step_density(state, dt, model)
        v_new = step_marker(state.v, state.rho, fluxes, dt)
        # support stays away from the boundary
        assert mass(v_new) == pytest.approx(mass(state.v), abs=1e-14)

    def test_upwind_from_left(self, grid):
        """正の流束で左セルの比を運ぶテスト"""
        rho = grid.field([0.5, 0.5, 0.5, 0.5])
        q = grid.field([0.5, 0.25, 0.0, 0.0])
        fluxes = InterfaceFluxes(grid, np.full(5, 0.2), 0.1)
        q_new = step_marker(q, rho, fluxes, 0.1)
        # ratios 1, 0.5, 0, 0
        expected = q.values - 0.4 * np.diff(0.2 * np.array([1.0, 1.0, 0.5, 0.0, 0.0]))
        assert np.allclose(q_new.values, expected)

    def test_vacuum_cells_carry_zero_ratio(self, grid):
        """真空セルから比が流出しないテスト"""
        rho = grid.field([0.0, 0.5, 0.5, 0.5])
        q = grid.field([0.0, 0.5, 0.5, 0.5])
        fluxes = InterfaceFluxes(grid, np.array([0.0, 0.1, 0.1, 0.1, 0.1]), 0.1)
        q_new = step_marker(q, rho, fluxes, 0.1)
        assert q_new.values[0] == 0.0
        assert np.allclose(q_new.values, [0.0, 0.46, 0.5, 0.5])

    def test_dt_mismatch(self, grid):
        """流束と時間刻みの不一致のテスト"""
        rho = grid.field(np.full(4, 0.5))
        fluxes = InterfaceFluxes(grid, np.zeros(5), 0.1)
        with pytest.raises(FluxMismatchError):
            step_marker(rho, rho, fluxes, 0.2)

    def test_grid_mismatch(self, grid):
        """グリッドの不一致のテスト"""
        other = Grid(0.0, 2.0, 4)
        rho = grid.field(np.full(4, 0.5))
        fluxes = InterfaceFluxes(other, np.zeros(5), 0.1)
        with pytest.raises(FluxMismatchError):
            step_marker(rho, rho, fluxes, 0.1)


    def test_ratio_maximum_principle(self, model):
        """CFL を満たすランダムなデータで比 q/rho の最大値が増えないテスト"""
        grid = Grid(-1.0, 1.0, 200)
        rng = np.random.default_rng(7)
        rho = grid.field(rng.uniform(0.05, 0.95, grid.n_cells))
        ratio = rng.uniform(-1.0, 1.0, grid.n_cells)
        q = grid.field(rho.values * ratio)
        u = grid.field(np.ones(grid.n_cells))
        dt = 0.9 * grid.h

        rho_new, fluxes, _ = advance_density(rho, u, dt, model)
        q_new = step_marker(q, rho, fluxes, dt)

        assert np.min(rho_new.values) > 0.0
        assert np.max(np.abs(q_new.values / rho_new.values)) <= np.max(np.abs(ratio)) + 1e-12


class TestExtractRatio:
    def test_fallback(self, grid):
        """真空セルで fallback を使うテスト"""
        rho = grid.field([0.5, 0.0, 0.0, 0.2])
        q = grid.field([0.25, 0.0, 0.0, 0.1])
        assert np.allclose(extract_ratio(q, rho, 0.3).values, [0.5, 0.3, 0.3, 0.5])

    def test_pin_left(self, grid):
        """真空セルが左の値を引き継ぐテスト"""
        rho = grid.field([0.5, 0.0, 0.0, 0.2])
        q = grid.field([0.2, 0.0, 0.0, 0.1])
        assert np.allclose(extract_ratio(q, rho, 0.3, pin_left=True).values, [0.4, 0.4, 0.4, 0.5])

    def test_pin_left_leading_vacuum(self, grid):
        """左端の真空セルが fallback になるテスト"""
        rho = grid.field([0.0, 0.0, 0.5, 0.5])
        q = grid.field([0.0, 0.0, 0.1, 0.2])
        assert np.allclose(extract_ratio(q, rho, 0.3, pin_left=True).values, [0.3, 0.3, 0.2, 0.4])


class TestReconstruct:
    def test_prefix_sum(self, grid):
        """右端での原始関数値のテスト"""
        q = grid.field([1.0, 2.0, 0.0, -1.0])
        assert np.allclose(reconstruct(q, 0.5).values, [0.75, 1.25, 1.25, 1.0])

    def test_differentiate_inverts(self, grid):
        """微分が再構成の逆であるテスト"""
        q = grid.field([1.0, 2.0, 0.0, -1.0])
        assert np.allclose(differentiate(reconstruct(q, 0.5), 0.5).values, q.values)

    def test_uniform_distance_bounded_by_l1(self):
        """再構成した場の一様距離が境界値の差と L1 距離で抑えられるテスト"""
        grid = Grid(-2.0, 2.0, 200)
        rng = np.random.default_rng(11)
        for _ in range(20):
            v_f = grid.field(rng.uniform(-1.0, 1.0, grid.n_cells))
            v_g = grid.field(rng.uniform(-1.0, 1.0, grid.n_cells))
            u_inf_f, u_inf_g = rng.uniform(0.5, 1.5, 2)

            u_f, u_g = reconstruct(v_f, u_inf_f), reconstruct(v_g, u_inf_g)
            assert c0_distance(u_f, u_g) <= abs(u_inf_f - u_inf_g) + l1_distance(v_f, v_g) + 1e-12
            assert c0_distance(reconstruct(v_f, 0.0), reconstruct(v_g, 0.0)) <= l1_distance(v_f, v_g) + 1e-12
