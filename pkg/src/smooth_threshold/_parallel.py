"""Ordered task execution, sequential or thread-pooled.

Grid fits and cross-validation folds are independent tasks.  Results are
returned in submission order regardless of the worker count, so callers
that aggregate sequentially produce identical output for any ``threads``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

_T = TypeVar("_T")
_R = TypeVar("_R")


def run_tasks(fn: Callable[[_T], _R], items: Sequence[_T], threads: int = 1) -> List[_R]:
    """Apply ``fn`` to each item, preserving order.

    ``threads <= 1`` runs sequentially; otherwise a thread pool of that
    size is used.  ``ThreadPoolExecutor.map`` already yields results in
    input order, which keeps the output independent of scheduling.
    """
    items = list(items)
    threads = int(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
