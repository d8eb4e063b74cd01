"""
Output root and per-run directories.

A run is written into a hidden staging directory beside its target and
renamed into place only when the writer finishes without raising.
"""
import shutil
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from ..core.config import config
from ..core.exceptions import ValidationError
from ..core.logger import logger


class RunStore:
    """出力ルートと実行ディレクトリの管理"""

    def __init__(self, root: Optional[str] = None):
        self.root = Path(root or config.OUTPUT_ROOT)

    def init(self):
        """出力ルートを作成する"""
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_name: str) -> Path:
        self._check_name(run_name)
        return self.root / run_name

    def staging_dir(self, run_name: str) -> Path:
        self._check_name(run_name)
        return self.root / f".{run_name}.staging"

    def _check_name(self, run_name: str):
        """実行名が出力ルート直下の子ディレクトリを指すことを確認する"""
        if not run_name or run_name.startswith(".") or Path(run_name).name != run_name:
            raise ValidationError(f"run name '{run_name}' does not name a directory under {self.root}")
        root = self.root.resolve()
        if (root / run_name).resolve().parent != root:
            raise ValidationError(f"run name '{run_name}' escapes the output root {self.root}")

    @contextmanager
    def transaction(self, run_name: str) -> Iterator[Path]:
        """ステージングディレクトリに書き込み、成功時のみ実行ディレクトリへ移動する"""
        self._check_name(run_name)
        self.init()
        staging = self.staging_dir(run_name)
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir(parents=True)
        try:
            yield staging
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise

        target = self.run_dir(run_name)
        # 既存の実行結果は置き換える
        if target.exists():
            shutil.rmtree(target)
        staging.rename(target)
        logger.logger.info(f"Run written to {target}")
