"""
Piecewise initial data and the full system state.
"""
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Tuple

import numpy as np

from ..core.exceptions import InvalidDataError
from ..solvers.transport import differentiate, extract_ratio, reconstruct
from .grid import CellField, Grid

STATE_TOL = 1e-12


@dataclass(frozen=True)
class Piece:
    """区間 [x_left, x_right] 上の定数または一次関数"""
    x_left: float
    x_right: float
    value_left: float
    value_right: float

    def __post_init__(self):
        values = (self.x_left, self.x_right, self.value_left, self.value_right)
        if not all(np.isfinite(v) for v in values):
            raise InvalidDataError(f"piece {values} has non-finite entries")
        if self.x_right <= self.x_left:
            raise InvalidDataError(f"piece [{self.x_left}, {self.x_right}] is empty")

    @classmethod
    def constant(cls, x_left: float, x_right: float, value: float) -> 'Piece':
        return cls(float(x_left), float(x_right), float(value), float(value))

    @classmethod
    def linear(cls, x_left: float, x_right: float, value_left: float, value_right: float) -> 'Piece':
        return cls(float(x_left), float(x_right), float(value_left), float(value_right))

    @property
    def is_constant(self) -> bool:
        return self.value_left == self.value_right

    def value_at(self, x):
        slope = (self.value_right - self.value_left) / (self.x_right - self.x_left)
        return self.value_left + slope * (np.asarray(x, dtype=float) - self.x_left)

    def average_over(self, a, b):
        """セル [a,b] の平均値への寄与 (配列可)

        Cells lying entirely inside the piece get the exact mean, so a constant
        piece yields bit-identical averages.
        """
        lo = np.maximum(a, self.x_left)
        hi = np.minimum(b, self.x_right)
        width = np.maximum(hi - lo, 0.0)
        coverage = np.where((lo == a) & (hi == b), 1.0, width / (b - a))
        return coverage * 0.5 * (self.value_at(lo) + self.value_at(hi))

    def abs_integral(self) -> float:
        vl, vr = abs(self.value_left), abs(self.value_right)
        width = self.x_right - self.x_left
        if self.value_left * self.value_right >= 0.0:
            return width * 0.5 * (vl + vr)
        return width * (vl * vl + vr * vr) / (2.0 * (vl + vr))

    def shifted(self, dx: float) -> 'Piece':
        return replace(self, x_left=self.x_left + dx, x_right=self.x_right + dx)


@dataclass(frozen=True)
class PiecewiseProfile:
    """重なりのない区分的一次関数 (区間外は 0)"""
    pieces: Tuple[Piece, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.pieces, key=lambda p: p.x_left))
        for a, b in zip(ordered, ordered[1:]):
            if a.x_right > b.x_left + 1e-12:
                raise InvalidDataError(
                    f"pieces [{a.x_left}, {a.x_right}] and [{b.x_left}, {b.x_right}] overlap"
                )
        object.__setattr__(self, "pieces", ordered)

    @classmethod
    def of(cls, pieces: Iterable[Piece]) -> 'PiecewiseProfile':
        return cls(tuple(pieces))

    def cell_averages(self, grid: Grid) -> np.ndarray:
        edges = grid.edges
        total = np.zeros(grid.n_cells)
        for piece in self.pieces:
            total += piece.average_over(edges[:-1], edges[1:])
        return total

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for piece in self.pieces:
            inside = (x >= piece.x_left) & (x < piece.x_right)
            out = np.where(inside, piece.value_at(x), out)
        return out

    def sup(self) -> float:
        if not self.pieces:
            return 0.0
        return max(max(abs(p.value_left), abs(p.value_right)) for p in self.pieces)

    def min_value(self) -> float:
        values = [v for p in self.pieces for v in (p.value_left, p.value_right)]
        return min(values + [0.0])

    def max_value(self) -> float:
        values = [v for p in self.pieces for v in (p.value_left, p.value_right)]
        return max(values + [0.0])

    def l1(self) -> float:
        return float(sum(p.abs_integral() for p in self.pieces))

    def support(self) -> Optional[Tuple[float, float]]:
        nonzero = [p for p in self.pieces if p.value_left != 0.0 or p.value_right != 0.0]
        if not nonzero:
            return None
        return min(p.x_left for p in nonzero), max(p.x_right for p in nonzero)

    def breakpoints(self) -> np.ndarray:
        return np.unique([x for p in self.pieces for x in (p.x_left, p.x_right)])

    def is_continuous(self, x_min: float = -np.inf, x_max: float = np.inf, tol: float = 1e-12) -> bool:
        """(x_min, x_max) 内の全ての折れ点で左右の極限が一致するか"""
        for x in self.breakpoints():
            if not (x_min < x < x_max):
                continue
            left = sum(float(p.value_right) for p in self.pieces if p.x_right == x)
            right = sum(float(p.value_left) for p in self.pieces if p.x_left == x)
            if abs(left - right) > tol:
                return False
        return True

    def shifted(self, dx: float) -> 'PiecewiseProfile':
        return PiecewiseProfile(tuple(p.shifted(dx) for p in self.pieces))


@dataclass(frozen=True)
class InitialData:
    """初期データ (rho0, psi0, z_inf, u_inf)"""
    rho0: PiecewiseProfile
    psi0: PiecewiseProfile
    z_inf: float
    u_inf: float

    def __post_init__(self):
        if self.rho0.min_value() < 0.0 or self.rho0.max_value() > 1.0:
            raise InvalidDataError("initial density must lie in [0, 1]")
        if not (np.isfinite(self.z_inf) and np.isfinite(self.u_inf)):
            raise InvalidDataError("z_inf and u_inf must be finite")

    def support(self) -> Optional[Tuple[float, float]]:
        return self.rho0.support()

    def shifted(self, dx: float) -> 'InitialData':
        return replace(self, rho0=self.rho0.shifted(dx), psi0=self.psi0.shifted(dx))

    def with_u_inf(self, u_inf: float) -> 'InitialData':
        return replace(self, u_inf=float(u_inf))

    @property
    def has_constant_marker(self) -> bool:
        """psi0 = 0 かつ z_inf = 0 (u は空間的に一定)"""
        return self.z_inf == 0.0 and self.psi0.sup() == 0.0


@dataclass(frozen=True, eq=False)
class SystemState:
    t: float
    rho: CellField
    v: CellField
    w: CellField
    z: CellField
    u: CellField
    psi: CellField
    z_inf: float
    u_inf: float

    @classmethod
    def create(cls, t: float, rho: CellField, v: CellField, w: CellField,
               z_inf: float, u_inf: float) -> 'SystemState':
        """保存量 (rho, v, w) から z, u, psi を再構成して状態を生成"""
        return cls(
            t=float(t),
            rho=rho,
            v=v,
            w=w,
            z=reconstruct(w, z_inf),
            u=reconstruct(v, u_inf),
            psi=extract_ratio(w, rho, 0.0),
            z_inf=float(z_inf),
            u_inf=float(u_inf),
        )

    @classmethod
    def from_density_and_u(cls, t: float, rho: CellField, u: CellField,
                           z_inf: float, u_inf: float) -> 'SystemState':
        """rho と u から残りの場を導出する (粘性解で使用)"""
        v = differentiate(u, u_inf)
        z = extract_ratio(v, rho, z_inf, pin_left=True)
        w = differentiate(z, z_inf)
        return cls(float(t), rho, v, w, z, u, extract_ratio(w, rho, 0.0), float(z_inf), float(u_inf))

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def with_time(self, t: float) -> 'SystemState':
        return replace(self, t=float(t))


def build_initial_state(data: InitialData, grid: Grid) -> SystemState:
    """前積分で z0, u0 を構成し、両立条件を満たす初期状態を作る"""
    rho = grid.field(data.rho0.cell_averages(grid))
    if np.any(rho.values < -STATE_TOL) or np.any(rho.values > 1.0 + STATE_TOL):
        raise InvalidDataError("cell-averaged density leaves [0, 1]")
    rho = rho.with_values(np.clip(rho.values, 0.0, 1.0))
    psi = data.psi0.cell_averages(grid)
    w = grid.field(rho.values * psi)
    z = reconstruct(w, data.z_inf)
    v = grid.field(rho.values * z.values)
    state = SystemState.create(0.0, rho, v, w, data.z_inf, data.u_inf)
    if data.u_inf < 0.0 or np.min(state.u.values) < -STATE_TOL:
        raise InvalidDataError(
            f"constructed u0 is negative (min {min(data.u_inf, float(np.min(state.u.values))):.6g})"
        )
    return state
