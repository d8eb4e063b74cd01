"""
Verification report types.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.exceptions import ValidationError

K_NOTE = "K_measured is an empirical lower bound on any valid stability constant"
D_NOTE = "D(t) = M0*exp(C~ t) + (exp(C~ t) - 1) is one admissible TV envelope"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class CheckEntry:
    name: str
    worst_violation: float
    tolerance: float
    status: CheckStatus
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ConvergenceRow:
    n_cells: int
    h: float
    error: float
    order: Optional[float] = None


@dataclass(frozen=True)
class StabilityResult:
    """2つの解の差の時系列と測定された安定性定数"""
    times: Tuple[float, ...]
    lhs: Tuple[float, ...]
    ratios: Tuple[float, ...]
    phi: Tuple[float, ...]
    K_measured: float
    C_hat: float
    du_inf: float
    tau0: float

    def to_dict(self) -> dict:
        return {
            "K_measured": self.K_measured,
            "C_hat": self.C_hat,
            "du_inf": self.du_inf,
            "tau0": self.tau0,
            "times": list(self.times),
            "lhs": list(self.lhs),
            "ratios": list(self.ratios),
            "phi": list(self.phi),
            "interpretation": K_NOTE,
        }


@dataclass(frozen=True)
class UniquenessResult:
    gap: float
    tol_phi: float
    variants: Tuple[Tuple[float, int, float], ...]

    @property
    def threshold(self) -> float:
        return 20.0 * self.tol_phi

    @property
    def passed(self) -> bool:
        return self.gap <= self.threshold


@dataclass
class RunReport:
    """検証結果 (有効なチェックごとに1エントリ)"""
    run_name: str
    checks: List[CheckEntry] = field(default_factory=list)
    entropy_max: Dict[float, float] = field(default_factory=dict)
    entropy_interface_max: Dict[float, float] = field(default_factory=dict)
    tv_series: List[Tuple[float, float, float]] = field(default_factory=list)
    mass_series: List[Tuple[float, float]] = field(default_factory=list)
    phi_history: List[Tuple[float, float]] = field(default_factory=list)
    stability: Optional[StabilityResult] = None
    convergence: List[ConvergenceRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add_check(self, name: str, violation: float, tolerance: float, detail: str = "") -> CheckEntry:
        if any(entry.name == name for entry in self.checks):
            raise ValidationError(f"check '{name}' already recorded")
        violation = float(violation)
        ok = bool(np.isfinite(violation) and violation <= tolerance)
        entry = CheckEntry(name, violation, float(tolerance), CheckStatus.PASS if ok else CheckStatus.FAIL, detail)
        self.checks.append(entry)
        return entry

    def check(self, name: str) -> CheckEntry:
        for entry in self.checks:
            if entry.name == name:
                return entry
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.checks)

    @property
    def failed(self) -> Tuple[str, ...]:
        return tuple(entry.name for entry in self.checks if not entry.passed)

    def csv_rows(self) -> List[Tuple[str, str, str]]:
        return [(e.name, repr(e.worst_violation), "true" if e.passed else "false") for e in self.checks]

    def to_dict(self) -> dict:
        return {
            "run_name": self.run_name,
            "passed": self.passed,
            "checks": [entry.to_dict() for entry in self.checks],
            "entropy_max": {repr(k): v for k, v in sorted(self.entropy_max.items())},
            "entropy_interface_max": {repr(k): v for k, v in sorted(self.entropy_interface_max.items())},
            "tv_series": [list(row) for row in self.tv_series],
            "mass_series": [list(row) for row in self.mass_series],
            "phi_history": [list(row) for row in self.phi_history],
            "stability": self.stability.to_dict() if self.stability is not None else None,
            "convergence": [row.__dict__ for row in self.convergence],
            "notes": list(self.notes),
        }
