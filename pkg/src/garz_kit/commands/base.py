"""
Shared pieces of the subcommands: the command interface, common flags
and run bookkeeping.
"""
import argparse
from typing import Optional

from .. import __version__
from ..core.run_config import RunConfig
from ..models.report import RunReport
from ..models.trajectory import Trajectory
from ..storage.repository import RunRepository
from ..storage.run_store import RunStore
from ..verify.audit import AuditContext, audit_trajectory


class Command:
    """サブコマンドの基底クラス"""
    name = ""
    description = ""

    def __init__(self, app):
        self.app = app

    def configure(self, parser: argparse.ArgumentParser):
        add_config_arguments(parser)

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError


def add_config_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="run configuration file")
    add_output_argument(parser)
    parser.add_argument("--n-cells", type=int, default=None, help="override [grid] n_cells")
    parser.add_argument("--horizon", type=float, default=None, help="override [slab] horizon")
    parser.add_argument("--cfl", type=float, default=None, help="override [slab] cfl")


def add_output_argument(parser: argparse.ArgumentParser):
    parser.add_argument("--seed-dir", default=None, help="output root (default GARZ_OUTPUT_ROOT)")


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config)
    return config.with_overrides(n_cells=args.n_cells, horizon=args.horizon, cfl=args.cfl)


def repository_for(args: argparse.Namespace) -> RunRepository:
    return RunRepository(RunStore(args.seed_dir))


def audit(config: RunConfig, trajectory: Trajectory, run_name: Optional[str] = None) -> RunReport:
    context = AuditContext(
        data=config.initial_data(),
        model=config.build_model(),
        run_name=run_name or config.output.run_name,
        enabled=config.checks.enabled_groups(),
        cfl=config.slab.cfl,
    )
    return audit_trajectory(trajectory, context)


def manifest(command: str, config: Optional[RunConfig] = None, trajectory: Optional[Trajectory] = None,
             report: Optional[RunReport] = None, **extra) -> dict:
    """manifest.json の内容"""
    document = {"command": command, "version": __version__}
    if config is not None:
        document["run_name"] = config.output.run_name
        document["config"] = config.dumps()
    if trajectory is not None:
        grid = trajectory.grid
        document["grid"] = {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells, "h": grid.h}
        document["times"] = [float(t) for t in trajectory.times]
        document["slabs"] = [list(bounds) for bounds in trajectory.slab_bounds]
        if trajectory.constants is not None:
            document["constants"] = trajectory.constants.to_dict()
    if report is not None:
        document["passed"] = report.passed
        document["failed"] = list(report.failed)
    document.update(extra)
    return document


def finish(report: RunReport) -> int:
    """有効な全チェックが通れば 0"""
    for entry in report.checks:
        status = "ok" if entry.passed else "FAILED"
        print(f"{entry.name:<20} {status:<7} worst={entry.worst_violation:.3e} tol={entry.tolerance:.3e}")
    return 0 if report.passed else 1
