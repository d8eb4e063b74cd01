"""
Existence construction as an algorithm: Picard iteration over time slabs.

Each iterate solves the density equation with the previous iterate's u
frozen in space and time, transports the markers v = rho*z and w = rho*psi
with the resulting interface fluxes and reconstructs z and u by prefix sums.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from ..core.exceptions import ConvergenceError, ValidationError
from ..core.logger import logger
from ..models.grid import CellField, Grid, l1_distance, mass, total_variation
from ..models.state import InitialData, SystemState, build_initial_state
from ..models.trajectory import (
    TIME_TOL,
    PicardTrace,
    SlabConfig,
    StateBounds,
    Trajectory,
    TrajectoryConstants,
)
from ..models.velocity import VelocityModel, validate_model
from .scalar import SPEED_FLOOR, advance_density, entropy_residual
from .transport import step_marker

TAU_CAP = 0.25
TAU_XTOL = 1e-10
ENTROPY_LEVELS = tuple(float(k) for k in np.round(np.linspace(0.0, 1.0, 11), 10))


@dataclass(frozen=True)
class SolveSettings:
    """solve_global の数値設定"""
    grid: Grid
    cfl: float = 0.5
    snapshots_per_slab: int = 32
    max_picard_iters: int = 25
    tol_phi: Optional[float] = None
    tol_factor: float = 1.0
    tau0: Optional[float] = None
    output_stride: int = 1
    max_halvings: int = 5
    entropy_levels: Tuple[float, ...] = ENTROPY_LEVELS
    validation_samples: int = 101

    def __post_init__(self):
        if self.output_stride < 1:
            raise ValidationError("output_stride must be >= 1")
        if self.tol_factor <= 0.0:
            raise ValidationError("tol_factor must be positive")
        if self.tau0 is not None and self.tau0 <= 0.0:
            raise ValidationError("tau0 override must be positive")


# -- constants ---------------------------------------------------------------

def compute_M0(rho0: CellField) -> float:
    """TV 予算 M0 = 4 TV(rho0) + 4"""
    return 4.0 * total_variation(rho0) + 4.0


def compute_tilde_C(model: VelocityModel, z0_sup: float, psi0_sup: float, rho0_l1: float,
                    u_max: float = 1.0, n_samples: int = 101) -> float:
    """TV 成長定数 C~ (ボックス [0,1]x[0,u_max] 上の上限ノルムから組み立てる)"""
    norms = model.sup_norms(u_max, n_samples)
    return (
        norms.d21 * z0_sup
        + norms.d2 * z0_sup
        + norms.d22 * z0_sup ** 2 * rho0_l1
        + norms.d2 * (psi0_sup * rho0_l1 + z0_sup)
    )


def compute_tau0(tilde_C: float) -> float:
    """exp(C~ tau) - 1 <= 2 tau <= 1/2 を満たす最大のスラブ長"""
    if tilde_C < 0.0 or not np.isfinite(tilde_C):
        raise ValidationError(f"tilde_C must be finite and non-negative, got {tilde_C}")

    def excess(tau: float) -> float:
        return float(np.expm1(tilde_C * tau) - 2.0 * tau)

    if excess(TAU_CAP) <= 0.0:
        return TAU_CAP
    if tilde_C >= 2.0:
        # no positive tau satisfies the strict rule; fall back to exp(C~ tau) - 1 <= 1/2
        tau = min(TAU_CAP, float(np.log1p(0.5) / tilde_C))
        logger.log_warning(f"slab length set from the TV growth bound, tau0={tau:.6g}", f"tilde_C={tilde_C:.6g} >= 2")
        return tau
    lowest = float(np.log(2.0 / tilde_C) / tilde_C)
    tau = float(bisect(excess, lowest, TAU_CAP, xtol=TAU_XTOL))
    if excess(tau) > 0.0:
        tau -= TAU_XTOL
    return tau


def tv_envelope(t, M0: float, tilde_C: float):
    """実装した TV 上界 D(t) = M0 e^{C~t} + (e^{C~t} - 1)"""
    growth = np.exp(tilde_C * np.asarray(t, dtype=float))
    return M0 * growth + (growth - 1.0)


def default_tol_phi(h: float, rho0_l1: float) -> float:
    return h * rho0_l1 if rho0_l1 > 0.0 else h * 1e-12


# -- Picard functional -------------------------------------------------------

def _phi_states(curr: SystemState, prev: SystemState, prev_prev: Optional[SystemState] = None) -> float:
    v_older = prev_prev if prev_prev is not None else curr
    return l1_distance(prev.rho, curr.rho) + l1_distance(prev.v, v_older.v)


def phi_functional(curr: Trajectory, prev: Trajectory, t: float,
                   prev_prev: Optional[Trajectory] = None) -> float:
    """Picard 汎関数

    With two iterates this is ||rho_prev - rho_curr|| + ||v_prev - v_curr||.
    Given prev_prev the v-term becomes ||v_prev - v_prev_prev||, the
    mixed-index form used as the stopping criterion.
    """
    older = prev_prev.state_at(t) if prev_prev is not None else None
    return _phi_states(curr.state_at(t), prev.state_at(t), older)


# -- slab solve ----------------------------------------------------------------

@dataclass
class _Iterate:
    states: List[SystemState]
    inflow: List[float]
    steps: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    max_cfl: float = 0.0
    mass_defect: float = 0.0


def _snapshot_times(t0: float, t1: float, n_snap: int) -> List[float]:
    return [t0 + (t1 - t0) * (j / n_snap) for j in range(n_snap)] + [t1]


def _sweep(start: SystemState, frozen_u: List[np.ndarray], times: List[float], substeps: int,
           dt: float, model: VelocityModel) -> _Iterate:
    grid = start.grid
    rho, v, w = start.rho, start.v, start.w
    result = _Iterate(states=[start], inflow=[0.0])
    inflow = 0.0
    for j in range(len(times) - 1):
        u_a, u_b = frozen_u[j], frozen_u[j + 1]
        for m in range(substeps):
            frac = m / substeps
            u_frozen = grid.field((1.0 - frac) * u_a + frac * u_b)
            rho_new, fluxes, diag = advance_density(rho, u_frozen, dt, model, check_cfl=False)
            v = step_marker(v, rho, fluxes, dt, rho_floor=0.0)
            w = step_marker(w, rho, fluxes, dt, rho_floor=0.0)
            result.steps.append((rho.values, rho_new.values, u_frozen.values))
            result.max_cfl = max(result.max_cfl, diag.max_cfl)
            result.mass_defect = max(result.mass_defect, abs(diag.mass_defect))
            inflow += diag.inflow
            rho = rho_new
        result.states.append(SystemState.create(times[j + 1], rho, v, w, start.z_inf, start.u_inf))
        result.inflow.append(inflow)
    return result


def _record(trace: PicardTrace, iterate: _Iterate):
    trace.rho_sup.append(max(s.rho.sup() for s in iterate.states))
    trace.u_sup.append(max(s.u.sup() for s in iterate.states))
    trace.z_sup.append(max(s.z.sup() for s in iterate.states))
    trace.tv_max.append(max(total_variation(s.rho) for s in iterate.states))


def _entropy_maxima(iterate: _Iterate, dt: float, model: VelocityModel,
                    levels: Tuple[float, ...]) -> Dict[float, float]:
    grid = iterate.states[0].grid
    maxima = {}
    for k in levels:
        worst = -np.inf
        for rho_old, rho_new, u in iterate.steps:
            residual = entropy_residual(grid.field(rho_old), grid.field(rho_new), grid.field(u), k, dt, model,
                                        form="interface")
            worst = max(worst, float(np.max(residual.values)))
        maxima[k] = worst
    return maxima


def picard_slab(start: SystemState, slab: SlabConfig, model: VelocityModel,
                t_end: Optional[float] = None, bounds: Optional[StateBounds] = None,
                entropy_levels: Tuple[float, ...] = ENTROPY_LEVELS) -> Tuple[Trajectory, PicardTrace]:
    """1つのタイムスラブ上の Picard 反復"""
    t0 = start.t
    t1 = t0 + slab.tau0 if t_end is None else float(t_end)
    if t1 <= t0:
        raise ValidationError(f"slab end {t1} must follow its start {t0}")
    bounds = bounds or StateBounds.from_state(start)
    speed = slab.max_speed if slab.max_speed is not None else model.max_speed(bounds.u_max)

    times = _snapshot_times(t0, t1, slab.snapshots_per_slab)
    interval = (t1 - t0) / slab.snapshots_per_slab
    dt_target = slab.cfl * start.grid.h / max(speed, SPEED_FLOOR)
    substeps = max(1, int(np.ceil(interval / dt_target - 1e-9)))
    dt = interval / substeps

    trace = PicardTrace(t0, t1)
    frozen = _Iterate(states=[start.with_time(t) for t in times], inflow=[0.0] * len(times))
    _record(trace, frozen)
    previous: List[_Iterate] = [frozen]

    for n in range(2, slab.max_picard_iters + 1):
        prev = previous[-1]
        curr = _sweep(start, [s.u.values for s in prev.states], times, substeps, dt, model)
        for state in curr.states:
            bounds.enforce(state)
        _record(trace, curr)

        older = previous[-2] if len(previous) > 1 else prev
        phi = max(_phi_states(c, p, o) for c, p, o in zip(curr.states, prev.states, older.states))
        phi_sym = max(_phi_states(c, p) for c, p in zip(curr.states, prev.states))
        trace.phi.append(phi)
        trace.phi_symmetric.append(phi_sym)
        logger.logger.debug(f"Picard iterate {n} on [{t0:.6g}, {t1:.6g}]: phi={phi:.3e} (symmetric {phi_sym:.3e})")
        previous = [prev, curr]

        if phi <= slab.tol_phi:
            trace.converged = True
            break
    else:
        raise ConvergenceError(
            f"Picard iteration on [{t0:.6g}, {t1:.6g}] did not reach tol_phi={slab.tol_phi:.3e} "
            f"within {slab.max_picard_iters} iterations",
            trace,
        )

    final = previous[-1]
    result = Trajectory(start.grid)
    for state, inflow in zip(final.states, final.inflow):
        result.append(state, inflow)
    result.slab_bounds.append((t0, t1))
    result.traces.append(trace)
    result.merge_entropy(_entropy_maxima(final, dt, model, entropy_levels))
    result.max_cfl = final.max_cfl
    result.step_count = len(final.steps)
    result.mass_defect = final.mass_defect
    return result, trace


# -- global solve ----------------------------------------------------------------

def initial_u_sup(data: InitialData, state0: SystemState) -> float:
    """U_max = ||u0||_inf (箱 [0,1]x[0,U_max] の上端)"""
    return max(data.u_inf, float(np.max(state0.u.values)))


def prepare_constants(data: InitialData, settings: SolveSettings, model: VelocityModel
                      ) -> Tuple[SystemState, TrajectoryConstants]:
    """初期状態と保存量のみに依存する定数 (C~, tau0, M0) を一度だけ計算する"""
    state0 = build_initial_state(data, settings.grid)
    rho0_l1 = mass(state0.rho)
    u0_sup = initial_u_sup(data, state0)
    z0_sup = max(abs(data.z_inf), state0.z.sup())
    psi0_sup = max(data.psi0.sup(), state0.psi.sup())

    report = validate_model(model, u0_sup, settings.validation_samples)
    if not report.passed:
        raise ValidationError(f"model '{model.name}' fails {', '.join(report.failed)} on [0,1]x[0,{u0_sup:.6g}]")

    tilde_C = compute_tilde_C(model, z0_sup, psi0_sup, rho0_l1, u_max=u0_sup)
    tau0 = settings.tau0 if settings.tau0 is not None else compute_tau0(tilde_C)
    tol_phi = (settings.tol_phi if settings.tol_phi is not None
               else default_tol_phi(settings.grid.h, rho0_l1)) * settings.tol_factor
    constants = TrajectoryConstants(
        M0=compute_M0(state0.rho),
        tilde_C=tilde_C,
        tau0=tau0,
        tol_phi=tol_phi,
        rho0_l1=rho0_l1,
        u0_sup=u0_sup,
        z0_sup=z0_sup,
        psi0_sup=psi0_sup,
        max_speed=model.max_speed(u0_sup),
    )
    return state0, constants


def solve_global(data: InitialData, horizon: float, settings: SolveSettings,
                 model: VelocityModel) -> Trajectory:
    """スラブを連結して [0, horizon] 上の解を構成する"""
    if not horizon > 0.0:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    state0, constants = prepare_constants(data, settings, model)
    settings.grid.check_margin(data.support(), constants.max_speed, horizon)
    bounds = StateBounds(constants.u0_sup, constants.z0_sup, constants.psi0_sup)

    trajectory = Trajectory(settings.grid, constants=constants)
    trajectory.append(state0, 0.0)
    state, t, tau = state0, 0.0, constants.tau0
    inflow_total, halvings, index = 0.0, 0, 0

    while horizon - t > TIME_TOL:
        t_end = horizon if horizon - t <= tau * (1.0 + 1e-12) else t + tau
        slab = SlabConfig(
            tau0=tau,
            M0=constants.M0,
            tol_phi=constants.tol_phi,
            max_picard_iters=settings.max_picard_iters,
            cfl=settings.cfl,
            snapshots_per_slab=settings.snapshots_per_slab,
            max_speed=constants.max_speed,
        )
        try:
            slab_traj, trace = picard_slab(state, slab, model, t_end=t_end, bounds=bounds,
                                           entropy_levels=settings.entropy_levels)
        except ConvergenceError as error:
            if halvings >= settings.max_halvings:
                logger.log_error(error, f"slab {index}")
                raise
            halvings += 1
            tau *= 0.5
            logger.log_warning(f"did not converge; retrying with tau0={tau:.6g} ({halvings}/{settings.max_halvings})", f"slab {index}")
            continue

        last = len(slab_traj.states) - 1
        for j in range(1, last + 1):
            if j % settings.output_stride == 0 or j == last:
                trajectory.append(slab_traj.states[j], inflow_total + slab_traj.inflow[j])
        inflow_total += slab_traj.inflow[-1]
        trajectory.slab_bounds.append((t, t_end))
        trajectory.traces.append(trace)
        trajectory.merge_entropy(slab_traj.entropy_max)
        trajectory.max_cfl = max(trajectory.max_cfl, slab_traj.max_cfl)
        trajectory.step_count += slab_traj.step_count
        trajectory.mass_defect = max(trajectory.mass_defect, slab_traj.mass_defect)
        logger.log_slab(index, t, t_end, trace.iterations, trace.phi[-1] if trace.phi else 0.0)

        state, t, index = slab_traj.final, t_end, index + 1

    trajectory.constants = replace(constants, tau_used=tau)
    return trajectory
