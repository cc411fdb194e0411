"""Process-pool map for embarrassingly parallel experiment sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence


def default_workers() -> int:
    return os.cpu_count() or 1


def pmap(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Ordered map over items, across processes when workers > 1.

    Each task must derive its own RNG stream from its arguments; results are
    merged by value, so the pool introduces no nondeterminism.
    """
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
