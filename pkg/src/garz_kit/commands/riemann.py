"""
riemann subcommand: exact constant-u LWR Riemann solution on a grid.
"""
import argparse

from ..core.exceptions import InputRangeError
from ..core.logger import logger
from ..core.run_config import validate_run_name
from ..models.grid import Grid
from ..models.velocity import model_from_name
from ..solvers.oracle import lwr_riemann_exact
from .base import Command, add_output_argument, manifest, repository_for


class RiemannCommand(Command):
    name = "riemann"
    description = "exact constant-u LWR Riemann solution"

    def configure(self, parser: argparse.ArgumentParser):
        add_output_argument(parser)
        parser.add_argument("--rhoL", type=float, required=True)
        parser.add_argument("--rhoR", type=float, required=True)
        parser.add_argument("--u", type=float, required=True)
        parser.add_argument("--t", type=float, required=True)
        parser.add_argument("--x-min", type=float, default=-1.0)
        parser.add_argument("--x-max", type=float, default=1.0)
        parser.add_argument("--n", type=int, default=200)
        parser.add_argument("--model", default="greenshields")
        parser.add_argument("--gamma", type=float, default=2.0)
        parser.add_argument("--run-name", default="riemann")

    def run(self, args: argparse.Namespace) -> int:
        validate_run_name(args.run_name, section=None, field="--run-name")
        for label, value in (("rhoL", args.rhoL), ("rhoR", args.rhoR)):
            if not 0.0 <= value <= 1.0:
                raise InputRangeError(f"{label} must lie in [0, 1], got {value}")
        if args.u < 0.0:
            raise InputRangeError(f"u must be non-negative, got {args.u}")
        logger.log_command(self.name, f"rhoL={args.rhoL}, rhoR={args.rhoR}, u={args.u}, t={args.t}")

        model = model_from_name(args.model, {"gamma": args.gamma})
        grid = Grid(args.x_min, args.x_max, args.n)
        rho = lwr_riemann_exact(args.rhoL, args.rhoR, args.u, model, args.t, grid.centers)

        repository = repository_for(args)
        with repository.store.transaction(args.run_name) as staging:
            repository.write_profile(staging, "riemann.csv", grid.centers, rho)
            repository.write_manifest(staging, manifest(
                self.name,
                run_name=args.run_name,
                model=model.name,
                rhoL=args.rhoL, rhoR=args.rhoR, u=args.u, t=args.t,
                grid={"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells},
            ))
        print(f"Exact solution written to {repository.store.run_dir(args.run_name) / 'riemann.csv'}")
        return 0


def setup(app):
    """Set up the Riemann command."""
    app.add_command(RiemannCommand(app))
