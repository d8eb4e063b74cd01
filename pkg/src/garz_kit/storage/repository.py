import csv
import json
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..models.grid import mass, total_variation
from ..models.report import RunReport
from ..models.state import SystemState
from ..models.trajectory import Trajectory
from .run_store import RunStore

SNAPSHOT_COLUMNS = ("x_center", "rho", "u", "z", "psi", "v", "w")
NUMBER_FORMAT = "%.17g"


def _columns(state: SystemState) -> np.ndarray:
    return np.column_stack([
        state.grid.centers, state.rho.values, state.u.values, state.z.values,
        state.psi.values, state.v.values, state.w.values,
    ])


def _write_series(path: Path, x, y):
    np.savetxt(path, np.column_stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)]),
               fmt=NUMBER_FORMAT, delimiter=" ")


class RunRepository:
    """実行ディレクトリへの軌道・レポート・プロット用データの書き出し"""

    def __init__(self, store: RunStore):
        self.store = store

    def write_trajectory(self, directory: Path, trajectory: Trajectory) -> Dict[str, float]:
        """snapshots/NNNN.csv を書き出し、ファイル名と時刻の対応を返す"""
        snapshots = directory / "snapshots"
        snapshots.mkdir(parents=True, exist_ok=True)
        index = {}
        for n, state in enumerate(trajectory.states):
            name = f"{n:04d}.csv"
            np.savetxt(snapshots / name, _columns(state), fmt=NUMBER_FORMAT, delimiter=",",
                       header=",".join(SNAPSHOT_COLUMNS), comments="")
            index[name] = state.t
        return index

    def write_profile(self, directory: Path, name: str, x: np.ndarray, rho: np.ndarray) -> Path:
        """(x, rho) の CSV (リーマン厳密解など)"""
        path = directory / name
        np.savetxt(path, np.column_stack([x, rho]), fmt=NUMBER_FORMAT, delimiter=",",
                   header="x_center,rho", comments="")
        return path

    def write_manifest(self, directory: Path, manifest: dict) -> Path:
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
        return path

    def write_report(self, directory: Path, report: RunReport):
        """report.json と (check, worst_violation, pass) の report.csv"""
        (directory / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
        with open(directory / "report.csv", "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(("check", "worst_violation", "pass"))
            writer.writerows(report.csv_rows())

    def emit_plotdata(self, directory: Path, trajectory: Optional[Trajectory] = None,
                      report: Optional[RunReport] = None) -> Path:
        """plot/ 以下に2列の数値テキストを書き出す"""
        plot = directory / "plot"
        plot.mkdir(parents=True, exist_ok=True)
        if trajectory is not None:
            for n, state in enumerate(trajectory.states):
                x = state.grid.centers
                _write_series(plot / f"rho_{n:04d}.dat", x, state.rho.values)
                _write_series(plot / f"u_{n:04d}.dat", x, state.u.values)
                _write_series(plot / f"z_{n:04d}.dat", x, state.z.values)
            times = trajectory.times
            _write_series(plot / "tv.dat", times, [total_variation(s.rho) for s in trajectory.states])
            _write_series(plot / "mass.dat", times, [mass(s.rho) for s in trajectory.states])
            rows = [row for trace in trajectory.traces for row in trace.history]
            if rows:
                _write_series(plot / "phi.dat", *zip(*rows))
        if report is not None:
            if report.stability is not None:
                _write_series(plot / "stability.dat", report.stability.times, report.stability.ratios)
            if report.convergence:
                _write_series(plot / "convergence.dat", [r.h for r in report.convergence],
                              [r.error for r in report.convergence])
        return plot

    def save(self, run_name: str, manifest: dict, trajectory: Optional[Trajectory] = None,
             report: Optional[RunReport] = None, plot: bool = True) -> Path:
        """1回の実行結果をまとめて書き出す"""
        with self.store.transaction(run_name) as staging:
            if trajectory is not None:
                manifest = dict(manifest, snapshots=self.write_trajectory(staging, trajectory))
            if report is not None:
                self.write_report(staging, report)
            if plot:
                self.emit_plotdata(staging, trajectory, report)
            self.write_manifest(staging, manifest)
        return self.store.run_dir(run_name)

    def read_snapshot(self, path: Path) -> Dict[str, np.ndarray]:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return {name: data[:, i] for i, name in enumerate(SNAPSHOT_COLUMNS)}
