"""Order-preserving worker pool shared by projection and grid search.

Results are gathered in submission order and every item is computed
independently, so the worker count never changes numeric output.
"""
from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, workers: int = 1):
    """Map ``fn`` over ``items``, optionally on a process pool."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    if "fork" not in multiprocessing.get_all_start_methods():
        return [fn(item) for item in items]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), mp_context=ctx) as ex:
        return list(ex.map(fn, items))
