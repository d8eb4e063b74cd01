"""
Multi-run studies: stability constant, uniqueness proxy and grid convergence.
"""
from dataclasses import replace
from itertools import combinations
from typing import List, Optional, Sequence

import numpy as np

from ..core.concurrency import run_solves
from ..core.exceptions import DegeneratePairError, ValidationError
from ..core.logger import logger
from ..models.grid import Grid, c0_distance, l1_distance
from ..models.report import ConvergenceRow, StabilityResult, UniquenessResult
from ..models.state import InitialData, build_initial_state
from ..models.trajectory import Trajectory, common_times
from ..models.velocity import VelocityModel
from ..solvers.iteration import SolveSettings, prepare_constants, solve_global
from ..solvers.oracle import Reference

# (cfl, snapshots per slab, Picard tolerance factor)
UNIQUENESS_VARIANTS = ((0.4, 32, 1.0), (0.5, 64, 0.5), (0.8, 32, 0.25))
UNIQUENESS_FACTOR = 20.0


def _separation(a, b) -> float:
    return c0_distance(a.u, b.u) + l1_distance(a.rho, b.rho)


def _smallest_growth_rate(times: Sequence[float], phi: Sequence[float], base: float) -> float:
    """phi(t) <= exp(C t) * base を満たす最小の C >= 0"""
    rate = 0.0
    for t, value in zip(times, phi):
        if t <= 0.0 or value <= base:
            continue
        if base <= 0.0:
            return float("inf")
        rate = max(rate, float(np.log(value / base) / t))
    return rate


def measure_stability(data1: InitialData, data2: InitialData, horizon: float, settings: SolveSettings,
                      model: VelocityModel, threads: Optional[int] = None) -> StabilityResult:
    """摂動した2つの初期データの解を比較し K を測定する"""
    grid = settings.grid
    start1, start2 = build_initial_state(data1, grid), build_initial_state(data2, grid)
    lhs0 = _separation(start1, start2)
    if lhs0 == 0.0:
        raise DegeneratePairError("identical initial data: use the uniqueness check instead")

    if settings.tau0 is None:
        tau0 = min(prepare_constants(data1, settings, model)[1].tau0,
                   prepare_constants(data2, settings, model)[1].tau0)
        settings = replace(settings, tau0=tau0)

    first, second = run_solves(
        [lambda: solve_global(data1, horizon, settings, model),
         lambda: solve_global(data2, horizon, settings, model)],
        threads,
    )
    times = common_times(first, second)
    lhs, phi = [], []
    for t in times:
        a, b = first.state_at(t), second.state_at(t)
        lhs.append(_separation(a, b))
        phi.append(l1_distance(a.rho, b.rho) + l1_distance(a.v, b.v))
    ratios = [value / lhs0 for value in lhs]

    du_inf = abs(data1.u_inf - data2.u_inf)
    C_hat = _smallest_growth_rate(times, phi, phi[0] + horizon * du_inf)
    result = StabilityResult(
        times=tuple(times),
        lhs=tuple(lhs),
        ratios=tuple(ratios),
        phi=tuple(phi),
        K_measured=max(ratios),
        C_hat=C_hat,
        du_inf=du_inf,
        tau0=settings.tau0,
    )
    logger.log_study("stability", f"{grid.n_cells} cells: K_measured={result.K_measured:.6g}, C_hat={C_hat:.6g}")
    return result


def uniqueness_check(data: InitialData, horizon: float, settings: SolveSettings, model: VelocityModel,
                     seeds: int = 3, threads: Optional[int] = None) -> UniquenessResult:
    """内部設定だけを変えた同一データの解の最大差"""
    if seeds < 2:
        raise ValidationError(f"uniqueness check needs at least 2 runs, got {seeds}")
    _, constants = prepare_constants(data, settings, model)
    variants = tuple(UNIQUENESS_VARIANTS[i % len(UNIQUENESS_VARIANTS)] for i in range(seeds))

    def job(variant):
        cfl, snapshots, factor = variant
        varied = replace(settings, cfl=cfl, snapshots_per_slab=snapshots, tau0=constants.tau0,
                         tol_factor=settings.tol_factor * factor)
        return lambda: solve_global(data, horizon, varied, model)

    runs: List[Trajectory] = run_solves([job(v) for v in variants], threads)
    gap = 0.0
    for a, b in combinations(runs, 2):
        for t in common_times(a, b):
            gap = max(gap, _separation(a.state_at(t), b.state_at(t)))
    result = UniquenessResult(gap=gap, tol_phi=constants.tol_phi, variants=variants)
    logger.log_study("uniqueness", f"gap over {seeds} runs: {gap:.3e} (threshold {result.threshold:.3e})")
    return result


def observed_orders(errors: Sequence[float]) -> List[Optional[float]]:
    orders: List[Optional[float]] = [None]
    for coarse, fine in zip(errors, errors[1:]):
        orders.append(float(np.log2(coarse / fine)) if coarse > 0.0 and fine > 0.0 else float("nan"))
    return orders


def convergence_study(data: InitialData, horizon: float, grids: Sequence[Grid], exact: Reference,
                      settings: SolveSettings, model: VelocityModel,
                      threads: Optional[int] = None) -> List[ConvergenceRow]:
    """格子列上の L1 誤差と観測収束次数"""
    if len(grids) < 3:
        raise ValidationError(f"a convergence ladder needs at least 3 grids, got {len(grids)}")
    for coarse, fine in zip(grids, grids[1:]):
        if fine != coarse.refined():
            raise ValidationError(f"grid {fine} does not halve h of {coarse}")

    def job(grid):
        return lambda: solve_global(data, horizon, replace(settings, grid=grid), model)

    runs = run_solves([job(g) for g in grids], threads)
    errors = []
    for grid, trajectory in zip(grids, runs):
        reference = np.asarray(exact(grid, trajectory.final.t))
        errors.append(float(grid.h * np.sum(np.abs(trajectory.final.rho.values - reference))))
    rows = [ConvergenceRow(g.n_cells, g.h, e, order) for g, e, order in zip(grids, errors, observed_orders(errors))]
    for row in rows:
        logger.log_study("convergence", f"n={row.n_cells}: L1 error {row.error:.3e}, order {row.order}")
    return rows
