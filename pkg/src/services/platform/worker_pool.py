from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from utils.config import settings

logger = logging.getLogger(__name__)

R = TypeVar("R")

DEFAULT_CHUNK = 512


class WorkerPool:
    """要素ブロック単位の並列実行。結果は常にブロック番号順に返す"""

    def __init__(self, max_workers: int | None = None, chunk_size: int = DEFAULT_CHUNK):
        self.max_workers = max(1, max_workers or settings.PLATE_THREADS)
        self.chunk_size = max(1, chunk_size)

    def chunks(self, n_items: int) -> list[range]:
        return [
            range(start, min(start + self.chunk_size, n_items))
            for start in range(0, n_items, self.chunk_size)
        ]

    def map_chunks(self, func: Callable[[range], R], n_items: int) -> list[R]:
        """func を各ブロックに適用する（ブロックの順序は入力順）"""
        blocks = self.chunks(n_items)
        if self.max_workers == 1 or len(blocks) <= 1:
            return [func(block) for block in blocks]
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            # map は投入順に結果を返すので、合算順序はワーカー数に依存しない
            return list(executor.map(func, blocks))


_default_pool: WorkerPool | None = None


def get_pool() -> WorkerPool:
    """設定値 PLATE_THREADS に従う共有プール"""
    global _default_pool
    if _default_pool is None:
        _default_pool = WorkerPool()
        logger.debug("worker pool max_workers=%d", _default_pool.max_workers)
    return _default_pool
