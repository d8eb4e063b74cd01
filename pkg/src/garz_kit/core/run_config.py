"""
Run configuration files.

Sections [model], [grid], [initial], [slab], [output], [checks] and the
optional [perturbation] and [convergence]. Piecewise data is written as
pieces separated by ';', each "x_left x_right value" or
"x_left x_right value_left->value_right".
"""
import configparser
import io
import re
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..models.grid import Grid
from ..models.state import InitialData, Piece, PiecewiseProfile
from ..models.velocity import VelocityModel, model_from_name
from ..solvers.iteration import SolveSettings
from .exceptions import ConfigError, GarzError

SECTIONS = ("model", "grid", "initial", "slab", "output", "checks", "perturbation", "convergence")
ARROWS = ("->", "→")


class ReferenceKind(str, Enum):
    EXACT = "exact"
    VISCOUS = "viscous"


@dataclass(frozen=True)
class PieceSpec:
    x_left: float
    x_right: float
    value_left: float
    value_right: float

    def format(self) -> str:
        if self.value_left == self.value_right:
            return f"{self.x_left!r} {self.x_right!r} {self.value_left!r}"
        return f"{self.x_left!r} {self.x_right!r} {self.value_left!r}->{self.value_right!r}"


@dataclass(frozen=True)
class ModelSection:
    name: str = "greenshields"
    gamma: float = 2.0


@dataclass(frozen=True)
class GridSection:
    x_min: float
    x_max: float
    n_cells: int


@dataclass(frozen=True)
class InitialSection:
    rho: Tuple[PieceSpec, ...]
    psi: Tuple[PieceSpec, ...] = ()
    z_inf: float = 0.0
    u_inf: float = 1.0


@dataclass(frozen=True)
class SlabSection:
    horizon: float
    cfl: float = 0.5
    snapshots_per_slab: int = 32
    max_picard_iters: int = 25
    tol_phi: Optional[float] = None
    tol_factor: float = 1.0


@dataclass(frozen=True)
class OutputSection:
    run_name: str = "run"
    stride: int = 1
    plot: bool = True


@dataclass(frozen=True)
class ChecksSection:
    bounds: bool = True
    mass: bool = True
    tv: bool = True
    entropy: bool = True
    picard: bool = True
    consistency: bool = True
    uniqueness: bool = False
    uniqueness_seeds: int = 3

    def enabled_groups(self) -> FrozenSet[str]:
        groups = ("bounds", "mass", "tv", "entropy", "picard", "consistency")
        return frozenset(name for name in groups if getattr(self, name))


@dataclass(frozen=True)
class PerturbationSection:
    shift_cells: float = 0.0
    du_inf: float = 0.0


@dataclass(frozen=True)
class ConvergenceSection:
    ladder: Tuple[int, ...] = ()
    reference: ReferenceKind = ReferenceKind.EXACT
    eps_factor: float = 4.0
    min_order: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    """解析・検証済みの実行設定"""
    grid: GridSection
    initial: InitialSection
    slab: SlabSection
    model: ModelSection = field(default_factory=ModelSection)
    output: OutputSection = field(default_factory=OutputSection)
    checks: ChecksSection = field(default_factory=ChecksSection)
    perturbation: Optional[PerturbationSection] = None
    convergence: Optional[ConvergenceSection] = None

    # -- parsing -------------------------------------------------------------

    @classmethod
    def load(cls, path) -> 'RunConfig':
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config '{path}': {e.strerror or e}")
        return cls.parse(text, default_name=path.stem)

    @classmethod
    def parse(cls, text: str, default_name: str = "run") -> 'RunConfig':
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.DuplicateOptionError as e:
            raise ConfigError("duplicate option", e.section, e.option, e.lineno)
        except configparser.DuplicateSectionError as e:
            raise ConfigError("duplicate section", e.section, None, e.lineno)
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("missing section header", None, None, e.lineno)
        except configparser.ParsingError as e:
            line = e.errors[0][0] if e.errors else None
            raise ConfigError("malformed line", None, None, line)

        reader = _SectionReader(parser, text)
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section '{section}'", section, None, reader.line_of(section, None))

        config = cls(
            model=reader.model(),
            grid=reader.grid(),
            initial=reader.initial(),
            slab=reader.slab(),
            output=reader.output(default_name),
            checks=reader.checks(),
            perturbation=reader.perturbation(),
            convergence=reader.convergence(),
        )
        reader.reject_unknown()
        config.validate(text)
        return config

    def validate(self, text: str = ""):
        """ドメインオブジェクトを組み立てて値の整合性を確認する"""
        lookup = _LineLookup(text)
        try:
            self.build_model()
        except GarzError as e:
            raise ConfigError(str(e), "model", "name", lookup.find("model", "name"))
        try:
            self.build_grid()
        except GarzError as e:
            raise ConfigError(str(e), "grid", "n_cells", lookup.find("grid", "n_cells"))
        for name in ("rho", "psi"):
            try:
                self._profile(name)
            except GarzError as e:
                raise ConfigError(str(e), "initial", name, lookup.find("initial", name))
        try:
            self.initial_data()
        except GarzError as e:
            raise ConfigError(str(e), "initial", "rho", lookup.find("initial", "rho"))

    # -- serialization ----------------------------------------------------------

    def dumps(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser["model"] = {"name": self.model.name, "gamma": repr(self.model.gamma)}
        parser["grid"] = {"x_min": repr(self.grid.x_min), "x_max": repr(self.grid.x_max),
                          "n_cells": str(self.grid.n_cells)}
        parser["initial"] = {
            "rho": "; ".join(p.format() for p in self.initial.rho),
            "psi": "; ".join(p.format() for p in self.initial.psi),
            "z_inf": repr(self.initial.z_inf),
            "u_inf": repr(self.initial.u_inf),
        }
        slab = {
            "horizon": repr(self.slab.horizon),
            "cfl": repr(self.slab.cfl),
            "snapshots_per_slab": str(self.slab.snapshots_per_slab),
            "max_picard_iters": str(self.slab.max_picard_iters),
            "tol_factor": repr(self.slab.tol_factor),
        }
        if self.slab.tol_phi is not None:
            slab["tol_phi"] = repr(self.slab.tol_phi)
        parser["slab"] = slab
        parser["output"] = {"run_name": self.output.run_name, "stride": str(self.output.stride),
                            "plot": _yes_no(self.output.plot)}
        parser["checks"] = {
            f.name: (str(getattr(self.checks, f.name)) if f.name == "uniqueness_seeds"
                     else _yes_no(getattr(self.checks, f.name)))
            for f in fields(ChecksSection)
        }
        if self.perturbation is not None:
            parser["perturbation"] = {"shift_cells": repr(self.perturbation.shift_cells),
                                      "du_inf": repr(self.perturbation.du_inf)}
        if self.convergence is not None:
            convergence = {
                "ladder": " ".join(str(n) for n in self.convergence.ladder),
                "reference": self.convergence.reference.value,
                "eps_factor": repr(self.convergence.eps_factor),
            }
            if self.convergence.min_order is not None:
                convergence["min_order"] = repr(self.convergence.min_order)
            parser["convergence"] = convergence
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def write(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    # -- overrides ---------------------------------------------------------------

    def with_overrides(self, n_cells: Optional[int] = None, horizon: Optional[float] = None,
                       cfl: Optional[float] = None) -> 'RunConfig':
        """コマンドラインのフラグで設定値を上書きする"""
        config = self
        if n_cells is not None:
            config = replace(config, grid=replace(config.grid, n_cells=int(n_cells)))
        if horizon is not None:
            if not horizon > 0.0:
                raise ConfigError(f"horizon must be positive, got {horizon}", "slab", "horizon")
            config = replace(config, slab=replace(config.slab, horizon=float(horizon)))
        if cfl is not None:
            if not 0.0 < cfl <= 1.0:
                raise ConfigError(f"cfl must lie in (0, 1], got {cfl}", "slab", "cfl")
            config = replace(config, slab=replace(config.slab, cfl=float(cfl)))
        config.validate()
        return config

    # -- domain objects ----------------------------------------------------------

    def build_model(self) -> VelocityModel:
        return model_from_name(self.model.name, {"gamma": self.model.gamma})

    def build_grid(self, n_cells: Optional[int] = None) -> Grid:
        return Grid(self.grid.x_min, self.grid.x_max, n_cells or self.grid.n_cells)

    def _profile(self, name: str) -> PiecewiseProfile:
        specs = getattr(self.initial, name)
        return PiecewiseProfile.of(Piece.linear(p.x_left, p.x_right, p.value_left, p.value_right) for p in specs)

    def initial_data(self) -> InitialData:
        return InitialData(self._profile("rho"), self._profile("psi"), self.initial.z_inf, self.initial.u_inf)

    def perturbed_data(self, grid: Optional[Grid] = None) -> InitialData:
        """[perturbation] を適用した2つ目の初期データ"""
        if self.perturbation is None:
            raise ConfigError("stability runs need a [perturbation] section", "perturbation")
        grid = grid or self.build_grid()
        data = self.initial_data().shifted(self.perturbation.shift_cells * grid.h)
        return data.with_u_inf(data.u_inf + self.perturbation.du_inf)

    def solve_settings(self, grid: Optional[Grid] = None) -> SolveSettings:
        return SolveSettings(
            grid=grid or self.build_grid(),
            cfl=self.slab.cfl,
            snapshots_per_slab=self.slab.snapshots_per_slab,
            max_picard_iters=self.slab.max_picard_iters,
            tol_phi=self.slab.tol_phi,
            tol_factor=self.slab.tol_factor,
            output_stride=self.output.stride,
        )

    def ladder_grids(self) -> List[Grid]:
        if self.convergence is None or not self.convergence.ladder:
            raise ConfigError("convergence runs need a [convergence] ladder", "convergence", "ladder")
        return [self.build_grid(n) for n in self.convergence.ladder]


RUN_NAME_PATTERN = re.compile(r"^[A-Za-z0-9_-][A-Za-z0-9_.-]*$")


def validate_run_name(name: str, section: Optional[str] = "output",
                      field: Optional[str] = "run_name", line: Optional[int] = None) -> str:
    """実行名が出力ルート直下の単一ディレクトリ名であることを確認する"""
    if not RUN_NAME_PATTERN.match(name or ""):
        raise ConfigError(f"run_name '{name}' must be a plain directory name", section, field, line)
    return name


def _yes_no(value: bool) -> str:
    return "yes" if value else "no"


class _LineLookup:
    """設定テキストからセクション/キーの行番号を探す"""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def find(self, section: str, key: Optional[str]) -> Optional[int]:
        current = None
        for number, raw in enumerate(self.lines, start=1):
            line = raw.strip()
            header = re.match(r"^\[(.+)\]$", line)
            if header:
                current = header.group(1).strip()
                if key is None and current == section:
                    return number
                continue
            if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", line):
                return number
        return None


class _SectionReader:
    """型付きの値を読み出し、読んだキーを記録する"""

    def __init__(self, parser: configparser.ConfigParser, text: str):
        self.parser = parser
        self.lookup = _LineLookup(text)
        self.seen: Dict[str, set] = {}

    def line_of(self, section: str, key: Optional[str]) -> Optional[int]:
        return self.lookup.find(section, key)

    def error(self, message: str, section: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, section, key, self.line_of(section, key))

    def raw(self, section: str, key: str, required: bool = False) -> Optional[str]:
        self.seen.setdefault(section, set()).add(key)
        if not self.parser.has_section(section):
            if required:
                raise self.error(f"missing section [{section}]", section)
            return None
        value = self.parser.get(section, key, fallback=None)
        if value is None and required:
            raise self.error(f"missing required field '{key}'", section, key)
        return value

    def number(self, section: str, key: str, default: Optional[float] = None,
               required: bool = False) -> Optional[float]:
        value = self.raw(section, key, required)
        if value is None or value.strip() == "":
            return default
        try:
            return float(value)
        except ValueError:
            raise self.error(f"expected a decimal number, got '{value}'", section, key)

    def integer(self, section: str, key: str, default: Optional[int] = None, minimum: int = 1,
                required: bool = False) -> Optional[int]:
        value = self.raw(section, key, required)
        if value is None or value.strip() == "":
            return default
        try:
            result = int(value)
        except ValueError:
            raise self.error(f"expected an integer, got '{value}'", section, key)
        if result < minimum:
            raise self.error(f"must be >= {minimum}, got {result}", section, key)
        return result

    def boolean(self, section: str, key: str, default: bool) -> bool:
        value = self.raw(section, key)
        if value is None or value.strip() == "":
            return default
        state = configparser.ConfigParser.BOOLEAN_STATES.get(value.strip().lower())
        if state is None:
            raise self.error(f"expected yes/no, got '{value}'", section, key)
        return state

    def pieces(self, section: str, key: str, required: bool = False) -> Tuple[PieceSpec, ...]:
        value = self.raw(section, key, required)
        if value is None:
            return ()
        specs = []
        for chunk in (c.strip() for c in value.split(";")):
            if not chunk:
                continue
            for arrow in ARROWS:
                chunk = chunk.replace(arrow, " -> ")
            tokens = chunk.split()
            try:
                if len(tokens) == 3:
                    left, right, v = (float(t) for t in tokens)
                    specs.append(PieceSpec(left, right, v, v))
                elif len(tokens) == 5 and tokens[3] == "->":
                    specs.append(PieceSpec(float(tokens[0]), float(tokens[1]), float(tokens[2]), float(tokens[4])))
                else:
                    raise ValueError(chunk)
            except ValueError:
                raise self.error(f"malformed piece '{chunk}' (expected 'xl xr v' or 'xl xr a->b')", section, key)
        if required and not specs:
            raise self.error("at least one piece is required", section, key)
        return tuple(specs)

    def model(self) -> ModelSection:
        name = (self.raw("model", "name") or "greenshields").strip().lower()
        return ModelSection(name=name, gamma=self.number("model", "gamma", 2.0))

    def grid(self) -> GridSection:
        return GridSection(
            x_min=self.number("grid", "x_min", required=True),
            x_max=self.number("grid", "x_max", required=True),
            n_cells=self.integer("grid", "n_cells", minimum=2, required=True),
        )

    def initial(self) -> InitialSection:
        return InitialSection(
            rho=self.pieces("initial", "rho", required=True),
            psi=self.pieces("initial", "psi"),
            z_inf=self.number("initial", "z_inf", 0.0),
            u_inf=self.number("initial", "u_inf", 1.0),
        )

    def slab(self) -> SlabSection:
        horizon = self.number("slab", "horizon", required=True)
        if not horizon > 0.0:
            raise self.error(f"horizon must be positive, got {horizon}", "slab", "horizon")
        cfl = self.number("slab", "cfl", 0.5)
        if not 0.0 < cfl <= 1.0:
            raise self.error(f"cfl must lie in (0, 1], got {cfl}", "slab", "cfl")
        tol_phi = self.number("slab", "tol_phi")
        if tol_phi is not None and not tol_phi > 0.0:
            raise self.error(f"tol_phi must be positive, got {tol_phi}", "slab", "tol_phi")
        tol_factor = self.number("slab", "tol_factor", 1.0)
        if not tol_factor > 0.0:
            raise self.error(f"tol_factor must be positive, got {tol_factor}", "slab", "tol_factor")
        return SlabSection(
            horizon=horizon,
            cfl=cfl,
            snapshots_per_slab=self.integer("slab", "snapshots_per_slab", 32),
            max_picard_iters=self.integer("slab", "max_picard_iters", 25, minimum=2),
            tol_phi=tol_phi,
            tol_factor=tol_factor,
        )

    def output(self, default_name: str) -> OutputSection:
        name = (self.raw("output", "run_name") or default_name).strip()
        validate_run_name(name, line=self.line_of("output", "run_name"))
        return OutputSection(
            run_name=name,
            stride=self.integer("output", "stride", 1),
            plot=self.boolean("output", "plot", True),
        )

    def checks(self) -> ChecksSection:
        defaults = ChecksSection()
        values = {
            f.name: self.boolean("checks", f.name, getattr(defaults, f.name))
            for f in fields(ChecksSection) if f.name != "uniqueness_seeds"
        }
        values["uniqueness_seeds"] = self.integer("checks", "uniqueness_seeds", defaults.uniqueness_seeds, minimum=2)
        return ChecksSection(**values)

    def perturbation(self) -> Optional[PerturbationSection]:
        if not self.parser.has_section("perturbation"):
            return None
        return PerturbationSection(
            shift_cells=self.number("perturbation", "shift_cells", 0.0),
            du_inf=self.number("perturbation", "du_inf", 0.0),
        )

    def convergence(self) -> Optional[ConvergenceSection]:
        if not self.parser.has_section("convergence"):
            return None
        raw = self.raw("convergence", "ladder") or ""
        try:
            ladder = tuple(int(token) for token in raw.split())
        except ValueError:
            raise self.error(f"ladder must list integers, got '{raw}'", "convergence", "ladder")
        for coarse, fine in zip(ladder, ladder[1:]):
            if fine != 2 * coarse:
                raise self.error(f"ladder must double each rung ({coarse} -> {fine})", "convergence", "ladder")
        reference = (self.raw("convergence", "reference") or ReferenceKind.EXACT.value).strip().lower()
        try:
            kind = ReferenceKind(reference)
        except ValueError:
            raise self.error(f"reference must be 'exact' or 'viscous', got '{reference}'", "convergence", "reference")
        eps_factor = self.number("convergence", "eps_factor", 4.0)
        if eps_factor < 1.0:
            raise self.error(f"eps_factor must be >= 1 to resolve the viscosity, got {eps_factor}",
                             "convergence", "eps_factor")
        return ConvergenceSection(
            ladder=ladder,
            reference=kind,
            eps_factor=eps_factor,
            min_order=self.number("convergence", "min_order"),
        )

    def reject_unknown(self):
        for section in self.parser.sections():
            known = self.seen.get(section, set())
            for key in self.parser.options(section):
                if key not in known:
                    raise self.error(f"unknown field '{key}'", section, key)
