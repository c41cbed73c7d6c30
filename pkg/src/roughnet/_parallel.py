"""Thread-pool helper capped by the ROUGHNET_THREADS environment variable."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    try:
        return max(1, int(os.environ.get("ROUGHNET_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered ``map``; runs on a thread pool when more than one worker is allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
