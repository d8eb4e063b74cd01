"""
solve, verify and validate-model subcommands.
"""
import argparse

from ..core.logger import logger
from ..core.run_config import RunConfig
from ..models.state import build_initial_state
from ..models.velocity import model_from_name, validate_model
from ..solvers.iteration import initial_u_sup, solve_global
from ..verify.studies import uniqueness_check
from .base import Command, audit, finish, load_config, manifest, repository_for


class SolveCommand(Command):
    name = "solve"
    description = "Picard/Godunov solve with trajectory output"

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        logger.log_command(self.name, f"{config.output.run_name}, {config.grid.n_cells} cells")
        trajectory = solve_global(config.initial_data(), config.slab.horizon, config.solve_settings(),
                                  config.build_model())
        report = audit(config, trajectory)
        repository_for(args).save(
            config.output.run_name,
            manifest(self.name, config, trajectory, report),
            trajectory,
            report,
            plot=config.output.plot,
        )
        return finish(report)


class VerifyCommand(Command):
    name = "verify"
    description = "solve and run the invariant battery"

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        logger.log_command(self.name, config.output.run_name)
        data, model = config.initial_data(), config.build_model()
        settings = config.solve_settings()
        trajectory = solve_global(data, config.slab.horizon, settings, model)
        report = audit(config, trajectory)
        if config.checks.uniqueness:
            result = uniqueness_check(data, config.slab.horizon, settings, model, config.checks.uniqueness_seeds)
            report.add_check("uniqueness", result.gap, result.threshold, f"{len(result.variants)} runs")
        repository_for(args).save(
            config.output.run_name,
            manifest(self.name, config, trajectory, report),
            trajectory,
            report,
            plot=config.output.plot,
        )
        return finish(report)


class ValidateModelCommand(Command):
    name = "validate-model"
    description = "check the velocity model conditions on a sampled box"

    def configure(self, parser: argparse.ArgumentParser):
        parser.add_argument("--config", default=None, help="take the model from a run configuration")
        parser.add_argument("--model", default="greenshields")
        parser.add_argument("--gamma", type=float, default=2.0)
        parser.add_argument("--u-max", type=float, default=None,
                            help="upper end of the u range (default ||u0|| with --config, else 1)")
        parser.add_argument("--samples", type=int, default=101)

    def run(self, args: argparse.Namespace) -> int:
        u_max = args.u_max
        if args.config:
            config = RunConfig.load(args.config)
            model = config.build_model()
            if u_max is None:
                data = config.initial_data()
                u_max = initial_u_sup(data, build_initial_state(data, config.build_grid()))
        else:
            model = model_from_name(args.model, {"gamma": args.gamma})
        if u_max is None:
            u_max = 1.0
        logger.log_command(self.name, f"{model.name} on [0,1]x[0,{u_max:.6g}]")
        print(f"box [0,1]x[0,{u_max:.6g}]")
        report = validate_model(model, u_max, args.samples)
        for result in report.conditions:
            status = "ok" if result.passed else "FAILED"
            where = f" at (rho, u)={result.location}" if result.location is not None else ""
            print(f"{result.name:<24} {status:<7} worst={result.worst_violation:.3e}{where}")
        return 0 if report.passed else 1


def setup(app):
    """Set up the solve commands."""
    app.add_command(SolveCommand(app))
    app.add_command(VerifyCommand(app))
    app.add_command(ValidateModelCommand(app))
