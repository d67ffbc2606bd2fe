"""Thread budget shared by the scan-style operations.

SBS_WORKBENCH_THREADS caps the pool; results always come back in input
order so reductions stay deterministic regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("SBS_WORKBENCH_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError("SBS_WORKBENCH_THREADS must be an integer") from exc
        if n >= 1:
            return n
    return min(4, os.cpu_count() or 1)


def ordered_map(fn, items):
    """Like map(), possibly parallel, always in input order."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
