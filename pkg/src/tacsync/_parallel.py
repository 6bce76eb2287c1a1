"""Worker fan-out helper.

The environment variable TACSYNC_THREADS caps the pool size (0 or unset
means auto = cpu count). Results always come back in submission order and
every task derives its own seed, so outputs are identical for any worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get("TACSYNC_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    limit = (os.cpu_count() or 1) if cap <= 0 else cap
    return max(1, min(n_tasks, limit))


def parallel_map(fn, items) -> list:
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
