"""Order-preserving parallel map capped by ``GERMFORGE_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("GERMFORGE_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
