from dataclasses import replace

import numpy as np
import pytest

from garz_kit.core.exceptions import InvariantBreachError, ValidationError
from garz_kit.models.state import build_initial_state
from garz_kit.models.trajectory import PicardTrace, SlabConfig, StateBounds, Trajectory, common_times


class TestSlabConfig:
    def test_valid(self):
        """既定値のテスト"""
        slab = SlabConfig(tau0=0.25, M0=6.0, tol_phi=1e-3)
        assert slab.max_picard_iters == 25
        assert slab.max_speed is None

    @pytest.mark.parametrize("kwargs", [
        {"tau0": 0.0},
        {"tol_phi": -1.0},
        {"M0": -1.0},
        {"max_picard_iters": 1},
        {"cfl": 1.5},
        {"snapshots_per_slab": 0},
    ])
    def test_invalid(self, kwargs):
        """不正な設定の拒否のテスト"""
        base = {"tau0": 0.25, "M0": 6.0, "tol_phi": 1e-3}
        base.update(kwargs)
        with pytest.raises(ValidationError):
            SlabConfig(**base)


class TestStateBounds:
    def test_from_initial_state(self, smoke_data, smoke_grid):
        """初期状態からの上限のテスト"""
        state = build_initial_state(smoke_data, smoke_grid)
        bounds = StateBounds.from_state(state)
        assert bounds.u_max == pytest.approx(float(np.max(state.u.values)))
        assert bounds.z_sup >= 0.2
        assert bounds.psi_sup == pytest.approx(0.5)
        assert all(v == 0.0 for v in bounds.violations(state).values())

    def test_enforce(self, smoke_data, smoke_grid):
        """上限違反で例外となるテスト"""
        state = build_initial_state(smoke_data, smoke_grid)
        bounds = StateBounds.from_state(state)
        rho = state.rho.values.copy()
        rho[3] = 1.5
        with pytest.raises(InvariantBreachError) as excinfo:
            bounds.enforce(replace(state, rho=state.rho.with_values(rho)))
        assert excinfo.value.bound == "rho_bounds"
        assert excinfo.value.violation == pytest.approx(0.5)


class TestPicardTrace:
    def test_ratios_and_dump(self):
        """比の計算とダンプのテスト"""
        trace = PicardTrace(0.0, 0.25, phi=[1e-2, 5e-3, 1e-3], rho_sup=[0.6] * 4,
                            u_sup=[1.0] * 4, z_sup=[0.2] * 4, tv_max=[1.2] * 4)
        assert trace.iterations == 4
        assert trace.ratios == pytest.approx([0.5, 0.2])
        dump = trace.dump()
        assert "slab [0, 0.25]" in dump
        assert dump.count("iterate") == 4
        assert trace.to_dict()["phi"] == [1e-2, 5e-3, 1e-3]


class TestTrajectory:
    def test_append_and_lookup(self, constant_data, constant_grid):
        """状態の追加と時刻検索のテスト"""
        state = build_initial_state(constant_data, constant_grid)
        trajectory = Trajectory(constant_grid)
        for t in (0.0, 0.5, 1.0):
            trajectory.append(state.with_time(t), 0.0)

        assert np.allclose(trajectory.times, [0.0, 0.5, 1.0])
        assert trajectory.state_at(0.5).t == 0.5
        assert trajectory.final.t == 1.0
        with pytest.raises(ValidationError):
            trajectory.state_at(0.3)

    def test_times_must_increase(self, constant_data, constant_grid):
        """時刻の単調増加のテスト"""
        state = build_initial_state(constant_data, constant_grid)
        trajectory = Trajectory(constant_grid)
        trajectory.append(state.with_time(0.5), 0.0)
        with pytest.raises(ValidationError):
            trajectory.append(state.with_time(0.5), 0.0)

    def test_common_times(self, constant_data, constant_grid):
        """共通の保存時刻のテスト"""
        state = build_initial_state(constant_data, constant_grid)
        a, b = Trajectory(constant_grid), Trajectory(constant_grid)
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            a.append(state.with_time(t), 0.0)
        for t in (0.0, 0.5, 1.0):
            b.append(state.with_time(t), 0.0)
        assert common_times(a, b) == [0.0, 0.5, 1.0]

    def test_merge_entropy(self, constant_grid):
        """エントロピー最大値の統合のテスト"""
        trajectory = Trajectory(constant_grid)
        trajectory.merge_entropy({0.0: -1.0, 0.5: 0.2})
        trajectory.merge_entropy({0.0: -2.0, 0.5: 0.3})
        assert trajectory.entropy_max == {0.0: -1.0, 0.5: 0.3}
