"""
Worker pool
One process pool shared by every fan-out of an allocator, estimator or sweep
"""

from contextlib import contextmanager
from concurrent.futures import ProcessPoolExecutor

import numpy as np


class WorkerPool:
    """
    Lazily started ProcessPoolExecutor with a fixed worker count.

    The executor is created by the first call that actually fans out and reused until
    close(). With one worker nothing is ever started. `starts` counts executor launches.
    """

    def __init__(self, workers=1):
        self.workers = max(1, int(workers))
        self.starts = 0
        self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def _pool(self):
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
            self.starts += 1
        return self._executor

    def map_ranges(self, fn, args, start, stop, min_chunk):
        """
        fn(*args, lo, hi) over contiguous slices of [start, stop), results in slice order.

        Each slice holds at least min_chunk items; a single slice runs in-process.
        """
        chunks = max(1, min(self.workers, (stop - start) // min_chunk))
        if chunks == 1:
            return [fn(*args, start, stop)]
        bounds = np.linspace(start, stop, chunks + 1).astype(int)
        executor = self._pool()
        futures = [executor.submit(fn, *args, int(lo), int(hi))
                   for lo, hi in zip(bounds[:-1], bounds[1:])]
        return [f.result() for f in futures]


@contextmanager
def shared_pool(workers=1, pool=None):
    """Yield `pool` when given, otherwise a pool owned by the with-block"""
    if pool is not None:
        yield pool
        return
    with WorkerPool(workers) as owned:
        yield owned
