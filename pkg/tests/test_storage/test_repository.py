import json

import numpy as np
import pytest

from garz_kit.models.report import RunReport
from garz_kit.solvers.iteration import SolveSettings, solve_global
from garz_kit.storage.repository import SNAPSHOT_COLUMNS, RunRepository
from garz_kit.storage.run_store import RunStore


@pytest.fixture
def repository(tmp_path):
    return RunRepository(RunStore(str(tmp_path / "runs")))


@pytest.fixture
def trajectory(shock_data, riemann_grid, model):
    return solve_global(shock_data, 0.25, SolveSettings(riemann_grid, output_stride=8), model)


@pytest.fixture
def report():
    report = RunReport("shock")
    report.add_check("mass", 0.0, 1e-12)
    report.add_check("tv", 2e-12, 1e-12)
    return report


class TestRunRepository:
    def test_save_layout(self, repository, trajectory, report):
        """実行ディレクトリの構成のテスト"""
        run_dir = repository.save("shock", {"command": "solve"}, trajectory, report)

        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["command"] == "solve"
        assert manifest["snapshots"]["0000.csv"] == 0.0
        assert len(manifest["snapshots"]) == len(trajectory.states)
        assert (run_dir / "report.json").exists()
        for name in ("tv.dat", "mass.dat", "phi.dat", "rho_0000.dat", "u_0000.dat", "z_0000.dat"):
            assert (run_dir / "plot" / name).exists()

    def test_snapshot_round_trip(self, repository, trajectory):
        """スナップショット CSV の列と値のテスト"""
        run_dir = repository.save("shock", {}, trajectory, plot=False)
        path = run_dir / "snapshots" / f"{len(trajectory.states) - 1:04d}.csv"

        assert path.read_text().splitlines()[0] == ",".join(SNAPSHOT_COLUMNS)
        columns = repository.read_snapshot(path)
        assert np.array_equal(columns["rho"], trajectory.final.rho.values)
        assert np.array_equal(columns["x_center"], trajectory.grid.centers)
        assert not (run_dir / "plot").exists()

    def test_report_csv(self, repository, report):
        """report.csv の行のテスト"""
        run_dir = repository.save("checks", {}, report=report)
        lines = (run_dir / "report.csv").read_text().splitlines()
        assert lines == ["check,worst_violation,pass", "mass,0.0,true", "tv,2e-12,false"]

    def test_plot_series(self, repository, trajectory):
        """プロット用データが2列であるテスト"""
        plot = repository.emit_plotdata(repository.store.root, trajectory)
        tv = np.loadtxt(plot / "tv.dat", ndmin=2)
        assert tv.shape == (len(trajectory.states), 2)
        assert np.allclose(tv[:, 0], trajectory.times)

    def test_phi_history_series(self, repository, trajectory):
        """phi.dat に全スラブの反復ごとの Phi が並ぶテスト"""
        plot = repository.emit_plotdata(repository.store.root, trajectory)
        phi = np.loadtxt(plot / "phi.dat", ndmin=2)

        expected = [(trace.slab_start, value) for trace in trajectory.traces for value in trace.phi]
        assert phi.shape == (len(expected), 2)
        assert np.array_equal(phi, np.array(expected))

    def test_output_is_deterministic(self, tmp_path, trajectory, report):
        """同じ結果から同一のファイルが書かれるテスト"""
        first = RunRepository(RunStore(str(tmp_path / "a"))).save("shock", {"command": "solve"}, trajectory, report)
        second = RunRepository(RunStore(str(tmp_path / "b"))).save("shock", {"command": "solve"}, trajectory, report)

        files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
        assert files == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
        for name in files:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_profile(self, repository, tmp_path):
        """(x, rho) プロファイルの書き出しのテスト"""
        path = repository.write_profile(tmp_path, "riemann.csv", np.array([0.0, 1.0]), np.array([0.2, 0.8]))
        assert path.read_text().splitlines() == ["x_center,rho", "0,0.20000000000000001", "1,0.80000000000000004"]
