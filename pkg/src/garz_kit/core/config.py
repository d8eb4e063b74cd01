"""
Configuration management for the GARZ solver kit.
Handles loading and accessing environment variables.
"""
import os
from pathlib import Path

from dotenv import load_dotenv

from .exceptions import ConfigError


class Config:
    """環境変数と設定の管理"""

    def __init__(self):
        """Initialize configuration."""
        # Load environment variables from .env file
        env_path = Path(".") / ".env"
        load_dotenv(env_path)

        # Optional settings with defaults
        self.OUTPUT_ROOT: str = os.getenv("GARZ_OUTPUT_ROOT", "runs")
        self.THREADS: int = self._get_positive_int("GARZ_THREADS", 2)

        # Fixed settings
        self.LOG_DIR: str = "logs"
        self.LOG_LEVEL: str = "INFO"

    def _get_positive_int(self, key: str, default: int) -> int:
        """Get a positive integer environment variable."""
        raw = os.getenv(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"environment variable '{key}' must be an integer, got '{raw}'")
        if value < 1:
            raise ConfigError(f"environment variable '{key}' must be >= 1, got {value}")
        return value


# Global configuration instance
config = Config()
