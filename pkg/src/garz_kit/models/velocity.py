"""
Velocity closures V(rho, u) for the GARZ system.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..core.exceptions import InputRangeError, ValidationError

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

FD_STEP = 1e-6
FD_STEP_SECOND = 1e-4
DOMAIN_TOL = 1e-12
SLOPE_SAMPLES = 257


@dataclass(frozen=True)
class SupNorms:
    velocity: float
    d1: float
    d2: float
    d21: float
    d22: float


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    worst_violation: float
    location: Optional[Tuple[float, float]]


@dataclass(frozen=True)
class ModelValidationReport:
    model_name: str
    u_max: float
    sample_count: int
    conditions: Tuple[ConditionResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failed(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.conditions if not c.passed)

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True, eq=False)
class VelocityModel:
    """速度関数 V(rho, u) とその導関数"""
    name: str
    velocity_fn: ArrayFn
    d1_fn: Optional[ArrayFn] = None
    d2_fn: Optional[ArrayFn] = None
    d21_fn: Optional[ArrayFn] = None
    d22_fn: Optional[ArrayFn] = None
    # argmax of rho -> rho*V(rho,u); flux is unimodal in rho when given
    critical_density_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # inverse of rho -> d/drho f(rho,u) on the concave range
    slope_inverse_fn: Optional[ArrayFn] = None
    # sup over rho in [0,1] of |d/drho f(rho,u)|
    slope_sup_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: Dict[str, float] = field(default_factory=dict)

    # -- evaluation -------------------------------------------------------

    def check_domain(self, rho, u):
        """定義域 [0,1] x [0,inf) のチェック"""
        rho = np.asarray(rho, dtype=float)
        u = np.asarray(u, dtype=float)
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))):
            raise InputRangeError(f"{self.name}: non-finite input")
        if np.any(rho < -DOMAIN_TOL) or np.any(rho > 1.0 + DOMAIN_TOL):
            raise InputRangeError(f"{self.name}: density outside [0, 1]")
        if np.any(u < -DOMAIN_TOL):
            raise InputRangeError(f"{self.name}: negative marker value")
        return rho, u

    def velocity(self, rho, u):
        rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        return self.velocity_fn(rho, u)

    def flux(self, rho, u, check: bool = True):
        """流量 f(rho,u) = rho * V(rho,u)"""
        if check:
            rho, u = self.check_domain(rho, u)
        else:
            rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        return rho * self.velocity_fn(rho, u)

    def d1(self, rho, u):
        rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        if self.d1_fn is not None:
            return self.d1_fn(rho, u)
        return (self.velocity_fn(rho + FD_STEP, u) - self.velocity_fn(rho - FD_STEP, u)) / (2 * FD_STEP)

    def d2(self, rho, u):
        rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        if self.d2_fn is not None:
            return self.d2_fn(rho, u)
        return (self.velocity_fn(rho, u + FD_STEP) - self.velocity_fn(rho, u - FD_STEP)) / (2 * FD_STEP)

    def d21(self, rho, u):
        rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        if self.d21_fn is not None:
            return self.d21_fn(rho, u)
        k = FD_STEP_SECOND
        v = self.velocity_fn
        return (v(rho + k, u + k) - v(rho + k, u - k) - v(rho - k, u + k) + v(rho - k, u - k)) / (4 * k * k)

    def d22(self, rho, u):
        rho, u = np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        if self.d22_fn is not None:
            return self.d22_fn(rho, u)
        k = FD_STEP_SECOND
        v = self.velocity_fn
        return (v(rho, u + k) - 2.0 * v(rho, u) + v(rho, u - k)) / (k * k)

    def eigenvalues(self, rho, u, check: bool = True):
        """特性速度 (lambda1, lambda2) = (V + rho*d1V, V)"""
        if check:
            rho, u = self.check_domain(rho, u)
        velocity = self.velocity(rho, u)
        return velocity + rho * self.d1(rho, u), velocity

    def slope(self, rho, u):
        """d/drho f(rho,u)"""
        return self.eigenvalues(rho, u, check=False)[0]

    def max_slope(self, u):
        u = np.asarray(u, dtype=float)
        if self.slope_sup_fn is not None:
            return self.slope_sup_fn(u)
        rho = np.linspace(0.0, 1.0, SLOPE_SAMPLES).reshape((-1,) + (1,) * u.ndim)
        return np.max(np.abs(self.slope(rho, u[None, ...])), axis=0)

    def critical_density(self, u):
        if self.critical_density_fn is None:
            raise ValidationError(f"{self.name}: no analytic critical density")
        return self.critical_density_fn(np.asarray(u, dtype=float))

    # -- box quantities -------------------------------------------------------

    def _lattice(self, u_max: float, n_samples: int):
        rho = np.linspace(0.0, 1.0, n_samples)
        u = np.linspace(0.0, u_max, n_samples)
        return np.meshgrid(rho, u, indexing="ij")

    def sup_norms(self, u_max: float, n_samples: int = 101) -> SupNorms:
        """[0,1] x [0,u_max] 上の導関数の上限ノルム"""
        rho, u = self._lattice(u_max, n_samples)
        return SupNorms(
            velocity=float(np.max(np.abs(self.velocity(rho, u)))),
            d1=float(np.max(np.abs(self.d1(rho, u)))),
            d2=float(np.max(np.abs(self.d2(rho, u)))),
            d21=float(np.max(np.abs(self.d21(rho, u)))),
            d22=float(np.max(np.abs(self.d22(rho, u)))),
        )

    def max_speed(self, u_max: float, n_samples: int = 101) -> float:
        """ボックス上の最大特性速度"""
        rho, u = self._lattice(u_max, n_samples)
        lam1, lam2 = self.eigenvalues(rho, u, check=False)
        slope_sup = self.max_slope(u[0])
        return float(max(np.max(np.abs(lam1)), np.max(np.abs(lam2)), np.max(slope_sup)))

    def is_concave(self, lo: float, hi: float, u: float, n_samples: int = 129) -> bool:
        """[lo,hi] 上で rho -> f(rho,u) が凹かどうか"""
        rho = np.linspace(lo, hi, n_samples)
        slopes = self.slope(rho, np.full_like(rho, u))
        return bool(np.all(np.diff(slopes) <= 1e-12))


def greenshields() -> VelocityModel:
    """V = u (1 - rho)"""
    return VelocityModel(
        name="greenshields",
        velocity_fn=lambda rho, u: u * (1.0 - rho),
        d1_fn=lambda rho, u: -u + 0.0 * rho,
        d2_fn=lambda rho, u: (1.0 - rho) + 0.0 * u,
        d21_fn=lambda rho, u: np.full(np.broadcast(rho, u).shape, -1.0),
        d22_fn=lambda rho, u: np.zeros(np.broadcast(rho, u).shape),
        critical_density_fn=lambda u: np.full_like(u, 0.5),
        slope_inverse_fn=lambda s, u: 0.5 * (1.0 - s / u),
        slope_sup_fn=np.abs,
    )


def power_law(gamma: float) -> VelocityModel:
    """V = u (1 - rho)^gamma, gamma >= 1"""
    if not np.isfinite(gamma) or gamma < 1.0:
        raise ValidationError(f"power model requires gamma >= 1, got {gamma}")
    g = float(gamma)

    def gap(rho):
        return np.clip(1.0 - rho, 0.0, None)

    return VelocityModel(
        name="power",
        velocity_fn=lambda rho, u: u * gap(rho) ** g,
        d1_fn=lambda rho, u: -g * u * gap(rho) ** (g - 1.0),
        d2_fn=lambda rho, u: gap(rho) ** g + 0.0 * u,
        d21_fn=lambda rho, u: -g * gap(rho) ** (g - 1.0) + 0.0 * u,
        d22_fn=lambda rho, u: np.zeros(np.broadcast(rho, u).shape),
        critical_density_fn=lambda u: np.full_like(u, 1.0 / (1.0 + g)),
        slope_inverse_fn=(lambda s, u: 0.5 * (1.0 - s / u)) if g == 1.0 else None,
        slope_sup_fn=np.abs,
        params={"gamma": g},
    )


def model_from_name(name: str, params: Optional[Dict[str, float]] = None) -> VelocityModel:
    """名前とパラメータから組み込みモデルを生成"""
    params = params or {}
    key = name.strip().lower()
    if key == "greenshields":
        return greenshields()
    if key == "power":
        return power_law(float(params.get("gamma", 2.0)))
    raise ValidationError(f"unknown velocity model '{name}'")


def validate_model(model: VelocityModel, u_max: float, n_samples: int = 101) -> ModelValidationReport:
    """格子上で (V) の5条件を検査する"""
    if n_samples < 2:
        raise ValidationError("n_samples must be >= 2 per axis")
    rho, u = model._lattice(u_max, n_samples)
    velocity = model.velocity(rho, u)
    d1 = model.d1(rho, u)
    d2 = model.d2(rho, u)

    def worst(violation: np.ndarray, name: str, rho_at: np.ndarray = rho) -> ConditionResult:
        violation = np.where(np.isfinite(violation), violation, np.inf)
        idx = np.unravel_index(int(np.argmax(violation)), violation.shape)
        value = float(max(violation[idx], 0.0))
        location = (float(rho_at[idx]), float(u[idx])) if value > 0.0 else None
        return ConditionResult(name, value <= 1e-12, value, location)

    derivatives = [velocity, d1, d2, model.d21(rho, u), model.d22(rho, u)]
    finite = np.logical_and.reduce([np.isfinite(d) for d in derivatives])
    conditions = (
        worst(np.where(finite, 0.0, np.inf), "c2_regularity"),
        worst(-velocity, "nonnegative_velocity"),
        worst(d1, "decreasing_in_density"),
        worst(-d2, "increasing_in_marker"),
        worst(np.abs(model.velocity(np.ones_like(u), u)), "vanishes_at_jam", rho_at=np.ones_like(u)),
    )
    return ModelValidationReport(model.name, float(u_max), n_samples * n_samples, conditions)
