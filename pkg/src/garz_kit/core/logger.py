"""
Logging configuration and utilities for the GARZ solver kit.

Console output goes to stderr so that result summaries on stdout stay clean.
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from .config import config


class Logger:
    """ログ管理クラス"""

    def __init__(self):
        self.logger = logging.getLogger("garz_kit")

        if not self.logger.handlers:
            self.setup()

    def setup(self):
        """ログ設定の初期化"""
        level = getattr(logging, config.LOG_LEVEL, logging.INFO)
        self.logger.setLevel(level)

        log_dir = Path(config.LOG_DIR)
        log_dir.mkdir(parents=True, exist_ok=True)

        formatter = logging.Formatter("[%(asctime)s] %(levelname)s %(name)s: %(message)s")

        # per-iterate Picard messages at DEBUG can be large; rotate at 4MB
        file_handler = RotatingFileHandler(
            filename=log_dir / "garz.log",
            maxBytes=4 * 1024 * 1024,
            backupCount=3,
            encoding="utf-8"
        )
        file_handler.setFormatter(formatter)

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(max(level, logging.WARNING))
        console_handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))

        self.logger.addHandler(file_handler)
        self.logger.addHandler(console_handler)

    def log_command(self, cmd: str, detail: str = ""):
        """サブコマンド開始のログを記録"""
        suffix = f" ({detail})" if detail else ""
        self.logger.info(f"garz {cmd}{suffix}")

    def log_error(self, error: Exception, context: str = ""):
        """エラーログを記録"""
        where = context or "garz"
        self.logger.error(f"{where}: {type(error).__name__}: {error}")

    def log_warning(self, message: str, context: str = ""):
        """警告ログを記録"""
        self.logger.warning(f"{context}: {message}" if context else message)

    def log_slab(self, index: int, t0: float, t1: float, iterations: int, phi: float):
        """タイムスラブ完了のログを記録"""
        self.logger.info(
            f"Slab {index} [{t0:.6g}, {t1:.6g}] converged after {iterations} iterations (phi={phi:.3e})"
        )

    def log_study(self, study: str, message: str):
        """スタディ結果のログを記録"""
        self.logger.info(f"[{study}] {message}")


# Global logger instance
logger = Logger()
