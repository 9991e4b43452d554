"""Chunked map with a deterministic merge.

Signals are cut into fixed-size chunks (independent of the worker count).
With ``reproducible=True`` the chunk partials are merged by a pairwise tree
in chunk order, so results are bit-identical for any number of workers.
Otherwise partials are summed in completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor, as_completed

CHUNK = 256


def default_workers() -> int:
    return os.cpu_count() or 1


def chunk_bounds(n: int, chunk: int = CHUNK):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def _add(a, b):
    if isinstance(a, tuple):
        return tuple(_add(x, y) for x, y in zip(a, b))
    return a + b


def tree_sum(parts):
    """Pairwise sum of ``parts`` in index order (tuples summed elementwise)."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to reduce")
    while len(parts) > 1:
        nxt = [_add(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def map_reduce(func, n: int, workers: int | None = None, reproducible: bool = True,
               chunk: int = CHUNK):
    """Apply ``func(lo, hi)`` to every chunk of ``range(n)`` and sum the results."""
    bounds = chunk_bounds(n, chunk)
    if not bounds:
        raise ValueError("empty batch")
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(bounds) == 1:
        parts = [func(lo, hi) for lo, hi in bounds]
        return tree_sum(parts) if reproducible else _sequential(parts)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, lo, hi) for lo, hi in bounds]
        if reproducible:
            return tree_sum([f.result() for f in futures])
        return _sequential(f.result() for f in as_completed(futures))


def _sequential(parts):
    total = None
    for p in parts:
        total = p if total is None else _add(total, p)
    return total
