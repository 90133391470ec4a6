"""Thread-pool mapping capped by ``KEYSOLVE_THREADS`` (0 or unset = CPU count)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("KEYSOLVE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"KEYSOLVE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("KEYSOLVE_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def pmap(fn, items) -> list:
    """Ordered map; results come back in input order whatever the scheduling."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
