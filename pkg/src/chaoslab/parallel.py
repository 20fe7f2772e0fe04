"""Order-preserving thread pool used for replicas and grid chunks."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_default_threads: int | None = None


def set_default_threads(n: int | None) -> None:
    """Set the pool size used when callers pass ``threads=None``."""
    global _default_threads
    _default_threads = None if n is None else max(1, int(n))


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    if _default_threads is not None:
        return _default_threads
    env = os.environ.get("CHAOSLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, evaluated on a thread pool; result order is input order."""
    items = list(items)
    n = min(resolve_threads(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
