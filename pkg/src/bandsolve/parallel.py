"""Column-parallel execution of the compiled kernels.

Systems in a batch are independent, so a batch is cut into contiguous column
blocks and each block is handed to a worker thread.  The kernels release the
GIL.  Every column sees the same arithmetic whatever the block layout, which
keeps results bitwise identical for any worker count.
"""

import contextlib
import os
import threading
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "BANDSOLVE_THREADS"

_lock = threading.Lock()
_pools: dict[int, ThreadPoolExecutor] = {}
_default_workers = None


def machine_workers():
    return os.cpu_count() or 1


def default_workers():
    """Worker count used when a call passes ``workers=None``."""
    if _default_workers is not None:
        return _default_workers
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {env!r}")
        return value
    return machine_workers()


def set_default_workers(workers):
    """Set the process-wide default; ``None`` restores env/machine default."""
    global _default_workers
    if workers is not None and int(workers) < 1:
        raise ValueError("workers must be >= 1")
    _default_workers = None if workers is None else int(workers)


@contextlib.contextmanager
def using_workers(workers):
    global _default_workers
    saved = _default_workers
    set_default_workers(workers)
    try:
        yield
    finally:
        _default_workers = saved


def column_blocks(m, workers):
    """Split ``range(m)`` into at most ``workers`` contiguous near-equal blocks."""
    k = max(1, min(int(workers), m))
    base, extra = divmod(m, k)
    blocks = []
    start = 0
    for w in range(k):
        stop = start + base + (1 if w < extra else 0)
        blocks.append((start, stop))
        start = stop
    return blocks


def _pool(size):
    with _lock:
        pool = _pools.get(size)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=size, thread_name_prefix="bandsolve")
            _pools[size] = pool
        return pool


def run_columns(kernel, m, workers, *args):
    """Call ``kernel(*args, j0, j1)`` over column blocks; return the results."""
    if workers is None:
        workers = default_workers()
    blocks = column_blocks(m, workers)
    if len(blocks) == 1:
        return [kernel(*args, 0, m)]
    pool = _pool(len(blocks))
    futures = [pool.submit(kernel, *args, j0, j1) for j0, j1 in blocks]
    return [f.result() for f in futures]


def first_failure(results):
    """Smallest non-negative kernel status, or -1 if every block succeeded."""
    bad = [r for r in results if r >= 0]
    return min(bad) if bad else -1
