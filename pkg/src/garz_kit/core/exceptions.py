"""
Custom exceptions for the GARZ solver kit.
"""
from typing import Optional


class GarzError(Exception):
    """ソルバーキットの基本例外クラス"""
    pass


class ValidationError(GarzError):
    """前提条件違反"""
    pass


class InputRangeError(GarzError):
    """モデルの定義域外の入力"""
    pass


class InvalidDataError(GarzError):
    """初期データが不正"""
    pass


class GridMismatchError(GarzError):
    """異なるグリッド上のフィールドの比較"""
    pass


class CFLViolationError(GarzError):
    """CFL条件違反"""
    pass


class FluxMismatchError(GarzError):
    """密度ステップとマーカーステップの不整合"""
    pass


class UnsupportedModelError(GarzError):
    """厳密解が扱えないモデル"""
    pass


class InstabilityError(GarzError):
    """数値的不安定 (NaN または発散)"""
    pass


class DegeneratePairError(GarzError):
    """同一の初期データによる安定性測定"""
    pass


class ConvergenceError(GarzError):
    """Picard反復が収束しない"""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class InvariantBreachError(GarzError):
    """反復中の不変量違反"""

    def __init__(self, message: str, bound: str, violation: float):
        super().__init__(message)
        self.bound = bound
        self.violation = violation


class ConfigError(GarzError):
    """設定関連のエラー"""

    def __init__(self, message: str, section: Optional[str] = None,
                 field: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.section = section
        self.field = field
        self.line = line

    def __str__(self) -> str:
        location = []
        if self.line is not None:
            location.append(f"line {self.line}")
        if self.section:
            location.append(f"[{self.section}]" + (f" {self.field}" if self.field else ""))
        if location:
            return f"{', '.join(location)}: {self.args[0]}"
        return str(self.args[0])
