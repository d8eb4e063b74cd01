"""
Uniform 1-D mesh, cell-averaged fields and the norms used by the checks.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.exceptions import GridMismatchError, ValidationError
from ..core.logger import logger


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValidationError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise ValidationError(f"invalid domain [{self.x_min}, {self.x_max}]")

    @classmethod
    def for_support(cls, support_left: float, support_right: float, speed: float,
                    horizon: float, n_cells: int) -> 'Grid':
        """台 [a,b] に対してマージン規則を満たすグリッドを生成"""
        margin = speed * horizon + 1.0
        return cls(support_left - margin, support_right + margin, n_cells)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.h * (np.arange(self.n_cells) + 0.5)

    def field(self, values) -> 'CellField':
        return CellField(self, values)

    def zeros(self) -> 'CellField':
        return CellField(self, np.zeros(self.n_cells))

    def refined(self) -> 'Grid':
        return Grid(self.x_min, self.x_max, 2 * self.n_cells)

    def check_margin(self, support: Optional[tuple], speed: float, horizon: float):
        """密度の台が境界に届かないことを確認する

        A support touching the domain edge is far-field data (e.g. Riemann
        states) and only logged; a compact support that sits too close to
        the edge is rejected.
        """
        if support is None:
            return
        left, right = support
        margin = speed * horizon + 1.0
        if left <= self.x_min or right >= self.x_max:
            logger.log_warning(
                f"density support [{left:.6g}, {right:.6g}] reaches the domain boundary; "
                "ghost cells carry the edge states"
            )
            return
        if self.x_min > left - margin or self.x_max < right + margin:
            raise ValidationError(
                f"domain [{self.x_min}, {self.x_max}] does not contain support "
                f"[{left}, {right}] with margin {margin:.6g}"
            )


@dataclass(frozen=True, eq=False)
class CellField:
    """セル平均値のフィールド"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise ValidationError(
                f"field length {values.shape} does not match n_cells={self.grid.n_cells}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.grid.n_cells

    def with_values(self, values) -> 'CellField':
        return CellField(self.grid, values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class InterfaceFluxes:
    """n_cells+1 個の界面フラックス (境界界面を含む)"""
    grid: Grid
    values: np.ndarray
    dt: float

    @property
    def boundary_inflow(self) -> float:
        """このステップで境界から流入した正味の質量"""
        return float(self.dt * (self.values[0] - self.values[-1]))


def _same_grid(f: CellField, g: CellField):
    if f.grid != g.grid:
        raise GridMismatchError(f"fields live on different grids: {f.grid} vs {g.grid}")


def total_variation(f: CellField) -> float:
    """内部界面の跳びの総和"""
    return float(np.sum(np.abs(np.diff(f.values))))


def l1_distance(f: CellField, g: CellField) -> float:
    _same_grid(f, g)
    return float(f.grid.h * np.sum(np.abs(f.values - g.values)))


def c0_distance(f: CellField, g: CellField) -> float:
    _same_grid(f, g)
    return float(np.max(np.abs(f.values - g.values)))


def mass(f: CellField) -> float:
    return float(f.grid.h * np.sum(f.values))
