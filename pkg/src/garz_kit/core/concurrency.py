"""
Concurrent execution of independent solves.
"""
import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from .config import config
from .logger import logger

T = TypeVar("T")


async def gather_solves(jobs: Sequence[Callable[[], T]], threads: Optional[int] = None) -> List[T]:
    """ブロッキングなソルブをスレッドプールで並行実行する (結果はジョブ順)"""
    workers = threads or config.THREADS
    loop = asyncio.get_running_loop()
    logger.logger.debug(f"Dispatching {len(jobs)} solves on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, job) for job in jobs]
        return list(await asyncio.gather(*futures))


def run_solves(jobs: Sequence[Callable[[], T]], threads: Optional[int] = None) -> List[T]:
    """gather_solves の同期ラッパー"""
    return asyncio.run(gather_solves(jobs, threads))
