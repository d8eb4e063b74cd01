"""
Slab configuration, Picard traces and trajectories.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.exceptions import InvariantBreachError, ValidationError
from .grid import Grid
from .state import SystemState

BOUND_TOL = 1e-10
DENSITY_TOL = 1e-12
TIME_TOL = 1e-9


@dataclass(frozen=True)
class SlabConfig:
    tau0: float
    M0: float
    tol_phi: float
    max_picard_iters: int = 25
    cfl: float = 0.5
    snapshots_per_slab: int = 32
    # box bound on the signal speed; None means derived from the slab start
    max_speed: Optional[float] = None

    def __post_init__(self):
        if not self.tau0 > 0.0:
            raise ValidationError(f"tau0 must be positive, got {self.tau0}")
        if not self.tol_phi > 0.0:
            raise ValidationError(f"tol_phi must be positive, got {self.tol_phi}")
        if self.M0 < 0.0:
            raise ValidationError(f"M0 must be non-negative, got {self.M0}")
        if self.max_picard_iters < 2:
            raise ValidationError("max_picard_iters must be >= 2")
        if not (0.0 < self.cfl <= 1.0):
            raise ValidationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.snapshots_per_slab < 1:
            raise ValidationError("snapshots_per_slab must be >= 1")


@dataclass(frozen=True)
class StateBounds:
    """解が保つべき上限 (最大値原理)"""
    u_max: float
    z_sup: float
    psi_sup: float

    @classmethod
    def from_state(cls, state: SystemState) -> 'StateBounds':
        return cls(
            u_max=max(state.u_inf, float(np.max(state.u.values))),
            z_sup=max(abs(state.z_inf), state.z.sup()),
            psi_sup=state.psi.sup(),
        )

    def violations(self, state: SystemState) -> Dict[str, float]:
        rho = state.rho.values
        u = state.u.values
        return {
            "rho_bounds": float(max(np.max(-rho), np.max(rho - 1.0), 0.0)),
            "u_bounds": float(max(np.max(-u), np.max(u - self.u_max), 0.0)),
            "z_bound": float(max(state.z.sup() - self.z_sup, 0.0)),
            "psi_bound": float(max(state.psi.sup() - self.psi_sup, 0.0)),
        }

    def enforce(self, state: SystemState):
        """違反があれば InvariantBreachError を送出"""
        for bound, violation in self.violations(state).items():
            tol = DENSITY_TOL if bound == "rho_bounds" else BOUND_TOL
            if violation > tol:
                raise InvariantBreachError(
                    f"{bound} violated by {violation:.3e} at t={state.t:.6g}", bound, violation
                )


@dataclass
class PicardTrace:
    """Picard 反復の記録"""
    slab_start: float
    slab_end: float
    phi: List[float] = field(default_factory=list)
    phi_symmetric: List[float] = field(default_factory=list)
    rho_sup: List[float] = field(default_factory=list)
    u_sup: List[float] = field(default_factory=list)
    z_sup: List[float] = field(default_factory=list)
    tv_max: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.rho_sup)

    @property
    def ratios(self) -> List[float]:
        return [b / a if a > 0.0 else float("nan") for a, b in zip(self.phi, self.phi[1:])]

    @property
    def history(self) -> List[Tuple[float, float]]:
        """(スラブ開始時刻, Phi_n) の反復ごとの行"""
        return [(self.slab_start, value) for value in self.phi]

    def to_dict(self) -> dict:
        return {
            "slab": [self.slab_start, self.slab_end],
            "iterations": self.iterations,
            "converged": self.converged,
            "phi": list(self.phi),
            "phi_symmetric": list(self.phi_symmetric),
            "rho_sup": list(self.rho_sup),
            "u_sup": list(self.u_sup),
            "z_sup": list(self.z_sup),
            "tv_max": list(self.tv_max),
        }

    def dump(self) -> str:
        lines = [f"Picard trace for slab [{self.slab_start:.6g}, {self.slab_end:.6g}]"]
        for n in range(self.iterations):
            phi = self.phi[n - 1] if 0 < n <= len(self.phi) else float("nan")
            lines.append(
                f"  iterate {n + 1}: phi={phi:.3e} rho_sup={self.rho_sup[n]:.6g} "
                f"u_sup={self.u_sup[n]:.6g} tv={self.tv_max[n]:.6g}"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class TrajectoryConstants:
    M0: float
    tilde_C: float
    tau0: float
    tol_phi: float
    rho0_l1: float
    u0_sup: float
    z0_sup: float
    psi0_sup: float
    max_speed: float
    tau_used: Optional[float] = None

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


@dataclass
class Trajectory:
    """保存時刻ごとの状態列と診断量"""
    grid: Grid
    states: List[SystemState] = field(default_factory=list)
    inflow: List[float] = field(default_factory=list)
    slab_bounds: List[Tuple[float, float]] = field(default_factory=list)
    traces: List[PicardTrace] = field(default_factory=list)
    entropy_max: Dict[float, float] = field(default_factory=dict)
    constants: Optional[TrajectoryConstants] = None
    max_cfl: float = 0.0
    step_count: int = 0
    mass_defect: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def initial(self) -> SystemState:
        return self.states[0]

    @property
    def final(self) -> SystemState:
        return self.states[-1]

    def append(self, state: SystemState, inflow: float):
        if state.grid != self.grid:
            raise ValidationError("trajectory states must share the grid")
        if self.states and state.t <= self.states[-1].t:
            raise ValidationError(f"stored times must increase (t={state.t} after {self.states[-1].t})")
        self.states.append(state)
        self.inflow.append(float(inflow))

    def index_of(self, t: float) -> int:
        times = self.times
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > TIME_TOL:
            raise ValidationError(f"no stored state at t={t}")
        return idx

    def state_at(self, t: float) -> SystemState:
        return self.states[self.index_of(t)]

    def merge_entropy(self, maxima: Dict[float, float]):
        for k, value in maxima.items():
            self.entropy_max[k] = max(self.entropy_max.get(k, -np.inf), value)


def common_times(a: Trajectory, b: Trajectory) -> List[float]:
    """2つの軌道が共に保存している時刻"""
    tb = b.times
    return [float(t) for t in a.times if np.min(np.abs(tb - t)) <= TIME_TOL]
