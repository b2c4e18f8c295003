"""Thread-pool helper that returns results in input order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "SS_SFR_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Resolve the worker count: explicit argument, then the environment
    override, then the machine's CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, preserving input order in the result.

    Work items must be independent; ordering (and therefore output
    determinism) never depends on the worker count.
    """
    seq: Sequence[T] = list(items)
    n = min(thread_count(workers), max(1, len(seq)))
    if n <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, seq))
