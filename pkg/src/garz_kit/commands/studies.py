"""
stability, uniqueness and convergence subcommands.
"""
import argparse

import numpy as np

from ..core.logger import logger
from ..core.run_config import ReferenceKind
from ..models.report import K_NOTE, RunReport
from ..solvers.oracle import exact_reference, viscous_reference
from ..verify.studies import convergence_study, measure_stability, uniqueness_check
from .base import Command, finish, load_config, manifest, repository_for

REFINEMENT_TOL = 0.2
ZERO_ERROR = 1e-14


class StabilityCommand(Command):
    name = "stability"
    description = "measure the stability constant K for a perturbed pair"

    def configure(self, parser: argparse.ArgumentParser):
        super().configure(parser)
        parser.add_argument("--refine", action="store_true", help="repeat on a grid with half the spacing")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        logger.log_command(self.name, config.output.run_name)
        model = config.build_model()
        grid = config.build_grid()
        result = measure_stability(config.initial_data(), config.perturbed_data(grid), config.slab.horizon,
                                   config.solve_settings(grid), model)

        report = RunReport(config.output.run_name, stability=result)
        report.notes.append(K_NOTE)
        report.add_check("stability_ratio", 0.0 if np.isfinite(result.K_measured) else np.inf, 0.0,
                         f"K_measured={result.K_measured:.6g}")
        extra = {"K_measured": result.K_measured, "C_hat": result.C_hat}
        if args.refine:
            fine = grid.refined()
            refined = measure_stability(config.initial_data(), config.perturbed_data(fine), config.slab.horizon,
                                        config.solve_settings(fine), model)
            change = abs(refined.K_measured - result.K_measured) / result.K_measured
            report.add_check("stability_refinement", change, REFINEMENT_TOL,
                             f"K_measured={refined.K_measured:.6g} on {fine.n_cells} cells")
            extra["K_measured_refined"] = refined.K_measured

        repository_for(args).save(config.output.run_name, manifest(self.name, config, report=report, **extra),
                                  report=report, plot=config.output.plot)
        print(f"K_measured = {result.K_measured:.6g} ({K_NOTE})")
        return finish(report)


class UniquenessCommand(Command):
    name = "uniqueness"
    description = "compare runs of the same data under varied internal settings"

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        logger.log_command(self.name, config.output.run_name)
        result = uniqueness_check(config.initial_data(), config.slab.horizon, config.solve_settings(),
                                  config.build_model(), config.checks.uniqueness_seeds)
        report = RunReport(config.output.run_name)
        report.add_check("uniqueness", result.gap, result.threshold,
                         f"{len(result.variants)} runs, tol_phi={result.tol_phi:.3e}")
        repository_for(args).save(
            config.output.run_name,
            manifest(self.name, config, report=report, gap=result.gap, variants=[list(v) for v in result.variants]),
            report=report,
            plot=False,
        )
        return finish(report)


class ConvergenceCommand(Command):
    name = "convergence"
    description = "grid refinement study against a reference solution"

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        logger.log_command(self.name, config.output.run_name)
        data, model = config.initial_data(), config.build_model()
        study = config.convergence
        grids = config.ladder_grids()
        if study.reference == ReferenceKind.EXACT:
            reference = exact_reference(data, model)
        else:
            reference = viscous_reference(data, model, study.eps_factor)
        rows = convergence_study(data, config.slab.horizon, grids, reference, config.solve_settings(), model)

        report = RunReport(config.output.run_name, convergence=rows)
        errors = [row.error for row in rows]
        growth = max(b - a for a, b in zip(errors, errors[1:]))
        report.add_check("convergence_monotone", max(growth, 0.0), 0.0, "errors decrease along the ladder")
        if study.min_order is not None:
            shortfall = 0.0
            for row, previous in zip(rows[1:], errors):
                if previous > ZERO_ERROR and row.error > ZERO_ERROR:
                    shortfall = max(shortfall, study.min_order - row.order)
            report.add_check("convergence_order", shortfall, 0.0, f"observed order >= {study.min_order}")

        repository_for(args).save(
            config.output.run_name,
            manifest(self.name, config, report=report, reference=study.reference.value),
            report=report,
            plot=config.output.plot,
        )
        for row in rows:
            order = "-" if row.order is None else f"{row.order:.3f}"
            print(f"n={row.n_cells:<6} h={row.h:.4e} L1={row.error:.4e} order={order}")
        return finish(report)


def setup(app):
    """Set up the study commands."""
    app.add_command(StabilityCommand(app))
    app.add_command(UniquenessCommand(app))
    app.add_command(ConvergenceCommand(app))
