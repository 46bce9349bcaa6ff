"""Counter-based random streams and the deterministic worker pool.

Every random quantity is drawn from a Philox-4x64 stream addressed by
``(seed, sample, component)``: the 128-bit key is ``(seed, sample)`` and the
component index occupies the second counter word. Any sample can therefore
be regenerated on its own, in any order, on any thread.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
THREADS_ENV = "SVSET_THREADS"


def substream(seed: int, sample: int, component: int = 0) -> np.random.Generator:
    if seed < 0 or seed > MASK64 or sample < 0 or component < 0:
        raise ValueError("seed, sample and component must be unsigned 64-bit integers")
    key = np.array([seed, sample], dtype=np.uint64)
    counter = np.array([0, component, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def chunked(n: int, size: int) -> list[range]:
    return [range(s, min(n, s + size)) for s in range(0, n, size)]


def ordered_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; order is preserved."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
