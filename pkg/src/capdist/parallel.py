"""Worker-pool helpers honoring the CAPDIST_THREADS environment variable."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """Configured parallelism; CAPDIST_THREADS unset or 0 means auto."""
    raw = os.environ.get("CAPDIST_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def map_ordered(fn, items):
    """Apply fn to items, preserving input order in the result list.

    Results are merged by input index, so the outcome does not depend on
    completion order.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
