"""Thread budget shared by the batch routines."""

import os
from concurrent.futures import ThreadPoolExecutor

_THREADS = None


def set_threads(n):
    """Set the global thread budget (``None`` restores the environment default)."""
    global _THREADS
    if n is not None and int(n) < 1:
        raise ValueError("thread count must be >= 1")
    _THREADS = None if n is None else int(n)


def get_threads():
    if _THREADS is not None:
        return _THREADS
    env = os.environ.get("NOCOLLIDE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"NOCOLLIDE_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError("NOCOLLIDE_THREADS must be >= 1")
        return n
    return 1


def pmap(fn, items, threads=None):
    """Ordered map; runs on a thread pool when more than one thread is budgeted.

    Results come back in input order, so the output is identical to the
    sequential loop whenever ``fn`` is pure.
    """
    items = list(items)
    threads = get_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
