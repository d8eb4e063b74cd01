"""
Independent reference solutions: exact constant-u LWR solutions and a
vanishing-viscosity solver for the full system.
"""
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from ..core.exceptions import InstabilityError, UnsupportedModelError, ValidationError
from ..core.logger import logger
from ..models.grid import Grid
from ..models.state import InitialData, PiecewiseProfile, SystemState, build_initial_state
from ..models.trajectory import Trajectory
from ..models.velocity import VelocityModel
from .scalar import SPEED_FLOOR

INVERSE_XTOL = 1e-12
CHARACTERISTIC_SAMPLES = 20001
BLOWUP = 10.0

Reference = Callable[[Grid, float], np.ndarray]


def _slope(model: VelocityModel, rho, u_c: float):
    rho = np.asarray(rho, dtype=float)
    return model.slope(rho, np.full_like(rho, u_c))


def _fan_inverse(model: VelocityModel, speeds: np.ndarray, u_c: float, lo: float, hi: float) -> np.ndarray:
    """f'(rho) = s の解 (f' は [lo,hi] 上で単調減少)"""
    if model.slope_inverse_fn is not None:
        return np.clip(model.slope_inverse_fn(speeds, np.full_like(speeds, u_c)), lo, hi)
    out = np.empty_like(speeds)
    for i, s in enumerate(speeds):
        out[i] = bisect(lambda r: float(_slope(model, r, u_c)) - s, lo, hi, xtol=INVERSE_XTOL)
    return out


def lwr_riemann_exact(rho_l: float, rho_r: float, u_c: float, model: VelocityModel, t: float, x) -> np.ndarray:
    """u = u_c 一定のときの LWR リーマン問題の厳密解"""
    x = np.asarray(x, dtype=float)
    if not t > 0.0:
        raise ValidationError(f"t must be positive, got {t}")
    if rho_l == rho_r:
        return np.full_like(x, rho_l)
    if u_c <= 0.0:
        return np.where(x < 0.0, rho_l, rho_r)
    lo, hi = min(rho_l, rho_r), max(rho_l, rho_r)
    if not model.is_concave(lo, hi, u_c):
        raise UnsupportedModelError(f"{model.name} flux is not concave on [{lo}, {hi}] at u={u_c}")

    if rho_l < rho_r:
        f_l, f_r = model.flux(rho_l, u_c), model.flux(rho_r, u_c)
        speed = float((f_r - f_l) / (rho_r - rho_l))
        return np.where(x < speed * t, rho_l, rho_r)

    xi = x / t
    s_l, s_r = float(_slope(model, rho_l, u_c)), float(_slope(model, rho_r, u_c))
    out = np.where(xi <= s_l, rho_l, rho_r)
    fan = (xi > s_l) & (xi < s_r)
    if np.any(fan):
        out[fan] = _fan_inverse(model, xi[fan], u_c, rho_r, rho_l)
    return out


def lwr_characteristics_exact(profile: PiecewiseProfile, u_c: float, model: VelocityModel, t: float, x,
                              window: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """連続な区分的一次データに対する特性曲線法の厳密解 (衝撃波形成前のみ)

    Outside ``window`` the data is continued by its edge values.
    """
    x = np.asarray(x, dtype=float)

    def initial(xi):
        if window is not None:
            xi = np.clip(xi, window[0], np.nextafter(window[1], -np.inf))
        return profile.evaluate(xi)

    if t <= 0.0:
        return initial(x)
    low_edge, high_edge = window if window is not None else (-np.inf, np.inf)
    if not profile.is_continuous(low_edge, high_edge):
        raise UnsupportedModelError("characteristic solution needs continuous data")

    reach = t * float(model.max_slope(np.array(u_c))) + 1.0
    lo, hi = x - reach, x + reach
    samples = np.union1d(np.linspace(lo.min(), hi.max(), CHARACTERISTIC_SAMPLES),
                         np.clip(profile.breakpoints(), lo.min(), hi.max()))
    foot = samples + t * _slope(model, initial(samples), u_c)
    if np.any(np.diff(foot) < -1e-12):
        raise UnsupportedModelError(f"characteristics cross before t={t}")

    while np.max(hi - lo) > INVERSE_XTOL:
        mid = 0.5 * (lo + hi)
        left = mid + t * _slope(model, initial(mid), u_c) < x
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return initial(0.5 * (lo + hi))


def exact_reference(data: InitialData, model: VelocityModel) -> Reference:
    """初期データに応じた厳密解 (リーマン問題または特性曲線)"""
    if not data.has_constant_marker:
        raise UnsupportedModelError("exact references need a constant marker (psi0 = 0, z_inf = 0)")
    u_c = data.u_inf
    pieces = data.rho0.pieces

    def reference(grid: Grid, t: float) -> np.ndarray:
        if t <= 0.0:
            return data.rho0.cell_averages(grid)
        if (len(pieces) == 2 and all(p.is_constant for p in pieces)
                and pieces[0].x_right == pieces[1].x_left):
            jump = pieces[0].x_right
            return lwr_riemann_exact(pieces[0].value_left, pieces[1].value_left, u_c, model, t,
                                     grid.centers - jump)
        return lwr_characteristics_exact(data.rho0, u_c, model, t, grid.centers,
                                         window=(grid.x_min, grid.x_max))

    return reference


def viscous_solve(data: InitialData, eps: float, grid: Grid, horizon: float, model: VelocityModel,
                  cfl: float = 0.4, snapshots: int = 32) -> Trajectory:
    """粘性正則化系の陽的中心差分解"""
    h = grid.h
    if not eps > 0.0:
        raise ValidationError(f"viscosity must be positive, got {eps}")
    if eps < h * (1.0 - 1e-12):
        raise ValidationError(f"viscosity {eps} is not resolved on h={h}")
    if not horizon > 0.0:
        raise ValidationError(f"horizon must be positive, got {horizon}")

    state = build_initial_state(data, grid)
    u_max = max(data.u_inf, float(np.max(state.u.values)))
    speed = max(model.max_speed(u_max), SPEED_FLOOR)
    if eps < 0.5 * speed * h * (1.0 - 1e-12):
        raise ValidationError(f"viscosity {eps:.6g} is below s*h/2 = {0.5 * speed * h:.6g}; "
                              "the centered scheme would lose its maximum principle")
    dt_max = min(cfl * h / speed, 0.25 * h * h / eps)
    diffusion = eps / (h * h)

    trajectory = Trajectory(grid)
    trajectory.append(state, 0.0)
    rho, u = state.rho.values.copy(), state.u.values.copy()
    times = np.linspace(0.0, horizon, snapshots + 1)
    inflow = 0.0
    for t_a, t_b in zip(times[:-1], times[1:]):
        n_steps = max(1, int(np.ceil((t_b - t_a) / dt_max - 1e-9)))
        dt = (t_b - t_a) / n_steps
        for _ in range(n_steps):
            re = np.pad(rho, 1, mode="edge")
            ue = np.pad(u, 1, mode="edge")
            f = model.flux(re, ue, check=False)
            velocity = model.velocity(rho, u)
            rho_next = rho - dt / (2.0 * h) * (f[2:] - f[:-2]) + dt * diffusion * (re[2:] - 2.0 * rho + re[:-2])
            u = u - dt * velocity * (ue[2:] - ue[:-2]) / (2.0 * h) + dt * diffusion * (ue[2:] - 2.0 * u + ue[:-2])
            inflow += dt * (f[1] - f[-2])
            rho = rho_next
            if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))) or np.max(np.abs(rho)) > BLOWUP:
                raise InstabilityError(f"viscous solve blew up before t={t_b:.6g}")
        trajectory.append(
            SystemState.from_density_and_u(float(t_b), grid.field(rho), grid.field(u), data.z_inf, data.u_inf),
            inflow,
        )
    logger.logger.debug(f"Viscous reference eps={eps:.3e} on {grid.n_cells} cells reached t={horizon:.6g}")
    return trajectory


def viscous_reference(data: InitialData, model: VelocityModel, eps_factor: float = 4.0) -> Reference:
    """eps = eps_factor * h の粘性解を参照解として返す"""
    def reference(grid: Grid, t: float) -> np.ndarray:
        if t <= 0.0:
            return data.rho0.cell_averages(grid)
        return viscous_solve(data, eps_factor * grid.h, grid, t, model).final.rho.values

    return reference
