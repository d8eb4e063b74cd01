"""
Conservative upwind transport of the markers v = rho*z and w = rho*psi,
ratio extraction and antiderivative reconstruction.
"""
import numpy as np

from ..core.exceptions import FluxMismatchError
from ..models.grid import CellField, InterfaceFluxes

RHO_FLOOR = 1e-12


def _ratio(q: np.ndarray, rho: np.ndarray, rho_floor: float) -> np.ndarray:
    out = np.zeros_like(q)
    np.divide(q, rho, out=out, where=rho > rho_floor)
    return out


def step_marker(q: CellField, rho_old: CellField, rho_fluxes: InterfaceFluxes, dt: float,
                rho_floor: float = RHO_FLOOR) -> CellField:
    """密度フラックスに従属したマーカーの保存型風上更新"""
    if rho_fluxes.dt != dt:
        raise FluxMismatchError(f"flux time step {rho_fluxes.dt} differs from marker step {dt}")
    if not (q.grid == rho_old.grid == rho_fluxes.grid):
        raise FluxMismatchError("marker, density and fluxes live on different grids")
    flux = rho_fluxes.values
    if flux.shape != (q.grid.n_cells + 1,):
        raise FluxMismatchError("flux array must hold n_cells + 1 interface values")

    theta = np.pad(_ratio(q.values, rho_old.values, rho_floor), 1, mode="edge")
    theta_if = np.where(flux >= 0.0, theta[:-1], theta[1:])
    marker_flux = flux * theta_if
    return q.with_values(q.values - (dt / q.grid.h) * np.diff(marker_flux))


def extract_ratio(q: CellField, rho: CellField, fallback: float, pin_left: bool = False,
                  rho_floor: float = RHO_FLOOR) -> CellField:
    """比 q/rho を取り出す (真空セルは fallback、pin_left なら左の値を引き継ぐ)"""
    supported = rho.values > rho_floor
    ratio = _ratio(q.values, rho.values, rho_floor)
    if not pin_left:
        return q.with_values(np.where(supported, ratio, fallback))
    last = np.where(supported, np.arange(len(ratio)), -1)
    np.maximum.accumulate(last, out=last)
    pinned = np.where(last >= 0, ratio[np.maximum(last, 0)], fallback)
    return q.with_values(pinned)


def reconstruct(q: CellField, boundary: float) -> CellField:
    """boundary + h * (包含的累積和)。セル値は右端での原始関数値"""
    return q.with_values(boundary + q.grid.h * np.cumsum(q.values))


def differentiate(out: CellField, boundary: float) -> CellField:
    """reconstruct の逆演算"""
    previous = np.concatenate(([boundary], out.values[:-1]))
    return out.with_values((out.values - previous) / out.grid.h)
