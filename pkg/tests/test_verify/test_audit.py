from dataclasses import replace

import numpy as np
import pytest

from garz_kit.models.report import D_NOTE
from garz_kit.models.grid import Grid
from garz_kit.models.state import build_initial_state
from garz_kit.solvers.iteration import ENTROPY_LEVELS, SolveSettings, solve_global
from garz_kit.solvers.oracle import viscous_solve
from garz_kit.verify.audit import CHECK_GROUPS, MARKER_ROUTE_TOL, AuditContext, audit_trajectory, entropy_maxima

BOUNDS_CHECKS = ["rho_bounds", "u_bounds", "z_bound", "psi_bound", "marker_ratio_v", "marker_ratio_w", "vacuum_pin"]


@pytest.fixture
def constant_run(constant_data, constant_grid, model):
    return solve_global(constant_data, 0.5, SolveSettings(constant_grid), model)


@pytest.fixture
def shock_run(shock_data, riemann_grid, model):
    return solve_global(shock_data, 0.5, SolveSettings(riemann_grid), model)


class TestAuditTrajectory:
    def test_constant_datum(self, constant_run, constant_data, model):
        """定数データで全チェックが違反ゼロとなるテスト"""
        report = audit_trajectory(constant_run, AuditContext(constant_data, model, "constant"))

        assert report.passed
        assert report.run_name == "constant"
        for entry in report.checks:
            assert entry.worst_violation == 0.0, entry.name
        assert len(report.mass_series) == len(constant_run.states)
        assert D_NOTE not in report.notes

    def test_shock(self, shock_run, shock_data, model):
        """衝撃波データで全チェックが通るテスト"""
        report = audit_trajectory(shock_run, AuditContext(shock_data, model))

        assert report.passed, report.failed
        tv = [row[1] for row in report.tv_series]
        assert max(tv) - min(tv) <= 1e-12
        assert report.check("entropy").tolerance == pytest.approx(10 * shock_run.grid.h)
        assert report.check("entropy").worst_violation <= 1e-10
        assert report.phi_history == [row for trace in shock_run.traces for row in trace.history]
        assert len(report.phi_history) == sum(len(trace.phi) for trace in shock_run.traces)

    def test_smoke(self, smoke_data, smoke_grid, model):
        """u が変化するデータでマーカー経路の差だけが不合格となるテスト"""
        trajectory = solve_global(smoke_data, 0.5, SolveSettings(smoke_grid), model)
        report = audit_trajectory(trajectory, AuditContext(smoke_data, model))

        assert report.failed == ("marker_consistency",)
        gap = report.check("marker_consistency")
        assert gap.tolerance == MARKER_ROUTE_TOL
        assert gap.worst_violation > MARKER_ROUTE_TOL
        assert report.check("entropy").passed
        assert report.check("entropy_interface").worst_violation <= 1e-10
        assert D_NOTE in report.notes
        for t, tv, envelope in report.tv_series:
            assert tv <= envelope

    def test_all_groups_reported(self, constant_run, constant_data, model):
        """全グループのチェック名のテスト"""
        report = audit_trajectory(constant_run, AuditContext(constant_data, model))
        names = [entry.name for entry in report.checks]
        assert names == BOUNDS_CHECKS + [
            "mass", "tv", "tv_first_slab", "entropy", "entropy_interface",
            "picard_phi", "cfl", "prefix_u", "prefix_z", "marker_consistency",
        ]

    def test_disabled_groups(self, constant_run, constant_data, model):
        """無効化したグループが報告されないテスト"""
        report = audit_trajectory(constant_run, AuditContext(constant_data, model, enabled=frozenset({"bounds"})))
        assert [entry.name for entry in report.checks] == BOUNDS_CHECKS
        assert set(CHECK_GROUPS) > {"bounds"}

    def test_corrupted_density(self, constant_run, constant_data, model):
        """範囲外の密度が違反として報告されるテスト"""
        state = constant_run.states[3]
        values = state.rho.values.copy()
        values[10] = 1.5
        constant_run.states[3] = replace(state, rho=state.rho.with_values(values))

        report = audit_trajectory(constant_run, AuditContext(constant_data, model))
        entry = report.check("rho_bounds")
        assert not entry.passed
        assert entry.worst_violation == pytest.approx(0.5)
        assert "rho_bounds" in report.failed
        assert not report.passed

    def test_non_converged_trace(self, constant_run, constant_data, model):
        """未収束の Picard 記録が失敗となるテスト"""
        constant_run.traces[0].converged = False
        report = audit_trajectory(constant_run, AuditContext(constant_data, model))
        assert report.check("picard_phi").worst_violation == np.inf
        assert not report.check("picard_phi").passed

    def test_audit_is_pure(self, shock_run, shock_data, model):
        """監査が軌道を変更せず同じ結果を返すテスト"""
        context = AuditContext(shock_data, model)
        final = shock_run.final.rho.values.copy()
        first = audit_trajectory(shock_run, context)
        second = audit_trajectory(shock_run, context)

        assert first.to_dict() == second.to_dict()
        assert np.array_equal(shock_run.final.rho.values, final)

    def test_viscous_trajectory(self, stationary_shock_data, riemann_grid, model):
        """Picard 記録のない軌道の監査のテスト"""
        trajectory = viscous_solve(stationary_shock_data, 4 * riemann_grid.h, riemann_grid, 0.25, model)
        report = audit_trajectory(trajectory, AuditContext(stationary_shock_data, model))

        assert report.check("entropy").passed
        assert report.check("entropy_interface").worst_violation <= 1e-10
        assert set(report.entropy_max) == set(ENTROPY_LEVELS)
        assert report.check("picard_phi").detail == "no Picard traces"
        assert report.check("mass").passed
        assert report.check("rho_bounds").passed


class TestEntropyMaxima:
    def test_smoke_does_not_tighten(self, smoke_data, model):
        """中心差分形式の残差が格子細分で縮まないことを記録するテスト"""
        worst = {}
        for n in (400, 800):
            grid = Grid(-4.0, 4.0, n)
            centered, interface = entropy_maxima([build_initial_state(smoke_data, grid)], model)
            worst[n] = max(centered.values())

            assert set(centered) == set(ENTROPY_LEVELS)
            assert 0.05 < worst[n] <= 10 * grid.h
            assert max(interface.values()) <= 1e-10
        assert worst[800] >= 0.9 * worst[400]

    @pytest.mark.parametrize("n_cells", [120, 240])
    def test_constant_marker_matches_interface(self, shock_data, model, n_cells):
        """u が一定なら両形式が一致し非正となるテスト"""
        state = build_initial_state(shock_data, Grid(-3.0, 3.0, n_cells))
        centered, interface = entropy_maxima([state], model)

        for k in ENTROPY_LEVELS:
            assert centered[k] == pytest.approx(interface[k], abs=1e-12)
        assert max(centered.values()) <= 1e-10

    def test_exceeds_tolerance_on_fine_grid(self, smoke_data, model):
        """細かい格子で残差が 10h を超えるテスト"""
        grid = Grid(-4.0, 4.0, 1600)
        state = build_initial_state(smoke_data, grid)
        centered, _ = entropy_maxima([state], model)

        assert max(centered.values()) > 10 * grid.h
