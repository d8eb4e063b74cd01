"""
Invariant sweep over a stored trajectory.

Every enabled check group adds its entries to a RunReport; failures are
report entries, never exceptions.
"""
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Tuple

import numpy as np

from ..models.grid import mass, total_variation
from ..models.report import D_NOTE, RunReport
from ..models.state import InitialData, SystemState
from ..models.trajectory import BOUND_TOL, DENSITY_TOL, StateBounds, Trajectory
from ..models.velocity import VelocityModel
from ..solvers.iteration import ENTROPY_LEVELS, compute_M0, compute_tilde_C, tv_envelope
from ..solvers.scalar import cfl_dt, entropy_residual, step_density
from ..solvers.transport import RHO_FLOOR, extract_ratio, reconstruct

CHECK_GROUPS = ("bounds", "mass", "tv", "entropy", "picard", "consistency")
MASS_TOL = 1e-12
TV_TOL = 1e-12
CFL_TOL = 1e-12
ENTROPY_FACTOR = 10.0
ENTROPY_ROUNDOFF = 1e-10
MARKER_ROUTE_TOL = 1e-10


@dataclass(frozen=True)
class AuditContext:
    """監査に必要な問題設定"""
    data: InitialData
    model: VelocityModel
    run_name: str = "run"
    enabled: FrozenSet[str] = frozenset(CHECK_GROUPS)
    cfl: float = 0.5


def _bounds(trajectory: Trajectory, data: InitialData) -> StateBounds:
    initial = StateBounds.from_state(trajectory.initial)
    return StateBounds(initial.u_max, initial.z_sup, max(initial.psi_sup, data.psi0.sup()))


def _envelope_constants(trajectory: Trajectory, context: AuditContext, bounds: StateBounds) -> Tuple[float, float]:
    if trajectory.constants is not None:
        return trajectory.constants.M0, trajectory.constants.tilde_C
    rho0 = trajectory.initial.rho
    tilde_C = compute_tilde_C(context.model, bounds.z_sup, bounds.psi_sup, mass(rho0), u_max=bounds.u_max)
    return compute_M0(rho0), tilde_C


def _check_bounds(report: RunReport, trajectory: Trajectory, bounds: StateBounds):
    worst = {"rho_bounds": 0.0, "u_bounds": 0.0, "z_bound": 0.0, "psi_bound": 0.0}
    ratio_v = ratio_w = pin = 0.0
    for state in trajectory.states:
        for name, violation in bounds.violations(state).items():
            worst[name] = max(worst[name], violation)
        rho = np.maximum(state.rho.values, 0.0)
        ratio_v = max(ratio_v, float(np.max(np.abs(state.v.values) - bounds.z_sup * rho)))
        ratio_w = max(ratio_w, float(np.max(np.abs(state.w.values) - bounds.psi_sup * rho)))

        vacuum = state.rho.values <= RHO_FLOOR
        if np.any(vacuum):
            left = np.concatenate(([state.z_inf], state.z.values[:-1]))
            pin = max(pin, float(np.max(np.abs(state.z.values - left)[vacuum])))

    report.add_check("rho_bounds", worst["rho_bounds"], DENSITY_TOL, "0 <= rho <= 1")
    report.add_check("u_bounds", worst["u_bounds"], BOUND_TOL, f"0 <= u <= {bounds.u_max:.6g}")
    report.add_check("z_bound", worst["z_bound"], BOUND_TOL, f"|z| <= {bounds.z_sup:.6g}")
    report.add_check("psi_bound", worst["psi_bound"], BOUND_TOL, f"|psi| <= {bounds.psi_sup:.6g}")
    report.add_check("marker_ratio_v", max(ratio_v, 0.0), DENSITY_TOL * max(1.0, bounds.z_sup), "|v| <= ||z0|| rho")
    report.add_check("marker_ratio_w", max(ratio_w, 0.0), DENSITY_TOL * max(1.0, bounds.psi_sup), "|w| <= ||psi0|| rho")
    report.add_check("vacuum_pin", pin, BOUND_TOL, "z constant across vacuum cells")


def _check_mass(report: RunReport, trajectory: Trajectory):
    m0 = mass(trajectory.initial.rho)
    scale = abs(m0) if m0 > 0.0 else 1.0
    drift = 0.0
    for state, inflow in zip(trajectory.states, trajectory.inflow):
        m = mass(state.rho)
        report.mass_series.append((state.t, m))
        drift = max(drift, abs(m - m0 - inflow) / scale)
    report.add_check("mass", drift, MASS_TOL, "relative drift net of boundary inflow")


def _check_tv(report: RunReport, trajectory: Trajectory, context: AuditContext, bounds: StateBounds):
    M0, tilde_C = _envelope_constants(trajectory, context, bounds)
    tv = [total_variation(state.rho) for state in trajectory.states]
    times = trajectory.times

    if context.data.has_constant_marker:
        growth = max([0.0] + [b - a for a, b in zip(tv, tv[1:])])
        report.add_check("tv", growth, TV_TOL, "TV non-increasing with constant u")
        report.tv_series.extend((float(t), value, tv[0]) for t, value in zip(times, tv))
    else:
        envelope = tv_envelope(times, M0, tilde_C)
        excess = float(np.max(np.asarray(tv) - envelope))
        report.add_check("tv", max(excess, 0.0), TV_TOL, f"TV <= D(t), M0={M0:.6g}, C~={tilde_C:.6g}")
        report.tv_series.extend((float(t), value, float(d)) for t, value, d in zip(times, tv, envelope))
        report.notes.append(D_NOTE)

    first_end = trajectory.slab_bounds[0][1] if trajectory.slab_bounds else float(times[-1])
    first = max(value for t, value in zip(times, tv) if t <= first_end + 1e-12)
    report.add_check("tv_first_slab", max(first - M0, 0.0), TV_TOL, f"TV <= M0={M0:.6g} on the first slab")


def entropy_maxima(states: Iterable[SystemState], model: VelocityModel, cfl: float = 0.5,
                   levels: Tuple[float, ...] = ENTROPY_LEVELS) -> Tuple[Dict[float, float], Dict[float, float]]:
    """各状態から1ステップ進めたときのエントロピー残差の最大値 (中心差分形式, 界面形式)"""
    centered = {k: -np.inf for k in levels}
    interface = {k: -np.inf for k in levels}
    for state in states:
        dt = cfl_dt(state, model, cfl)
        rho_new, _, _ = step_density(state, dt, model)
        for k in levels:
            for maxima, form in ((centered, "centered"), (interface, "interface")):
                residual = entropy_residual(state.rho, rho_new, state.u, k, dt, model, form=form)
                maxima[k] = max(maxima[k], float(np.max(residual.values)))
    return centered, interface


def _check_entropy(report: RunReport, trajectory: Trajectory, context: AuditContext):
    centered, interface = entropy_maxima(trajectory.states, context.model, context.cfl)
    report.entropy_max.update(centered)
    report.entropy_interface_max.update(interface)
    tol = ENTROPY_FACTOR * trajectory.grid.h
    worst = max(centered.values())
    k_worst = max(centered, key=centered.get)
    report.add_check("entropy", max(worst, 0.0), tol,
                     f"centered form over {len(trajectory.states)} states, worst at k={k_worst:g}")
    report.add_check("entropy_interface", max(max(interface.values()), 0.0), ENTROPY_ROUNDOFF,
                     "interface form, non-positive for a monotone step")


def _check_picard(report: RunReport, trajectory: Trajectory):
    if trajectory.constants is None or not trajectory.traces:
        report.add_check("picard_phi", 0.0, 0.0, "no Picard traces")
    else:
        tol_phi = trajectory.constants.tol_phi
        excess = 0.0
        for trace in trajectory.traces:
            final = trace.phi[-1] if trace.phi else 0.0
            report.phi_history.extend(trace.history)
            excess = max(excess, final - tol_phi if trace.converged else np.inf)
        report.add_check("picard_phi", excess, 0.0, f"tol_phi={tol_phi:.3e}")
    report.add_check("cfl", max(trajectory.max_cfl - 1.0, 0.0), CFL_TOL, f"max CFL {trajectory.max_cfl:.4g}")


def _check_consistency(report: RunReport, trajectory: Trajectory):
    prefix_u = prefix_z = routes = 0.0
    for state in trajectory.states:
        prefix_u = max(prefix_u, float(np.max(np.abs(state.u.values - reconstruct(state.v, state.u_inf).values))))
        prefix_z = max(prefix_z, float(np.max(np.abs(state.z.values - reconstruct(state.w, state.z_inf).values))))
        occupied = state.rho.values > RHO_FLOOR
        if np.any(occupied):
            transported = extract_ratio(state.v, state.rho, state.z_inf).values
            routes = max(routes, float(np.max(np.abs(transported - state.z.values)[occupied])))
    report.add_check("prefix_u", prefix_u, BOUND_TOL, "u = u_inf + h cumsum(v)")
    report.add_check("prefix_z", prefix_z, BOUND_TOL, "z = z_inf + h cumsum(w)")
    report.add_check("marker_consistency", routes, MARKER_ROUTE_TOL, "v/rho against z on rho > floor")


def audit_trajectory(trajectory: Trajectory, context: AuditContext) -> RunReport:
    """保存された全状態について不変量を検査する"""
    report = RunReport(context.run_name)
    bounds = _bounds(trajectory, context.data)
    if "bounds" in context.enabled:
        _check_bounds(report, trajectory, bounds)
    if "mass" in context.enabled:
        _check_mass(report, trajectory)
    if "tv" in context.enabled:
        _check_tv(report, trajectory, context, bounds)
    if "entropy" in context.enabled:
        _check_entropy(report, trajectory, context)
    if "picard" in context.enabled:
        _check_picard(report, trajectory)
    if "consistency" in context.enabled:
        _check_consistency(report, trajectory)
    return report
