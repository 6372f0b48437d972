"""
Allocator registry
Dispatch by name with wall-clock timing around the allocator call only
"""

import time

from allocators.greedy import greedy
from allocators.myopic import myopic, myopic_plus, random_allocation
from allocators.tirm import DEFAULT_PILOT_SIZE, tirm
from oracle.spread import EXACT, MonteCarloEstimator
from sampling.bounds import SampleParams

ALLOCATORS = ('myopic', 'myopic_plus', 'random', 'greedy_exact', 'greedy_mc', 'tirm')


def run_allocator(name, instance, seed=0, params=None, mc_runs=1000, pilot_size=DEFAULT_PILOT_SIZE,
                  max_theta=None, workers=1, events=None, verbose=False, log_steps=False,
                  pool=None):
    """
    Run one allocator by name; the result carries wall_ms.

    Sampling allocators fan out through `pool` when given, otherwise through one pool of
    `workers` processes opened for this call.
    """
    if name not in ALLOCATORS:
        raise ValueError(f"unknown allocator '{name}' (known: {', '.join(ALLOCATORS)})")

    common = {'events': events, 'verbose': verbose}
    started = time.perf_counter()
    if name == 'myopic':
        result = myopic(instance, **common)
    elif name == 'myopic_plus':
        result = myopic_plus(instance, **common)
    elif name == 'random':
        result = random_allocation(instance, seed=seed, **common)
    elif name == 'greedy_exact':
        result = greedy(instance, EXACT, log_steps=log_steps, **common)
    elif name == 'greedy_mc':
        with MonteCarloEstimator(runs=mc_runs, seed=seed, workers=workers, pool=pool) as estimator:
            result = greedy(instance, estimator, log_steps=log_steps, **common)
    else:
        result = tirm(instance, params or SampleParams(), seed=seed, pilot_size=pilot_size,
                      max_theta=max_theta, workers=workers, log_steps=log_steps, pool=pool,
                      **common)
    result.wall_ms = (time.perf_counter() - started) * 1000.0
    return result
