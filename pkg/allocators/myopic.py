"""
Virality-blind baselines
Myopic, Myopic+ and a random round-robin allocator
"""

import numpy as np

from allocators.base import (TERMINATION_BUDGETS_REACHED, TERMINATION_NO_FEASIBLE,
                             TERMINATION_PER_USER, AllocatorResult)
from model.campaign import Allocation
from sampling.rng import STREAM_ALLOC, stream_key, substream


def _direct_revenues(instance, alloc):
    return [float(instance.cpes[i] * instance.ctps(i)[alloc.seed_sets[i]].sum())
            if alloc.seed_sets[i] else 0.0
            for i in range(instance.h)]


def myopic(instance, events=None, verbose=False):
    """Every user gets its κ_u best ads by δ(u, i)·cpe(i); ties go to the lower ad id"""
    alloc = Allocation(instance.h, instance.n)
    if instance.h and instance.n:
        scores = np.vstack([instance.ctps(i) * instance.cpes[i] for i in range(instance.h)])
        ranking = np.argsort(-scores, axis=0, kind='stable')
        for u in range(instance.n):
            for i in ranking[:min(int(instance.kappa[u]), instance.h), u]:
                alloc.add(int(i), u)

    if verbose:
        print(f"✓ Myopic assigned {alloc.total_seeds()} seeds")
    return AllocatorResult(alloc, _direct_revenues(instance, alloc), termination=TERMINATION_PER_USER)


def _round_robin(instance, orders):
    """
    Ads take turns by ad id; each takes its next feasible user and accrues δ·cpe.
    An ad leaves the rotation once the accrued sum reaches B' or it runs out of users.
    """
    alloc = Allocation(instance.h, instance.n)
    accrued = np.zeros(instance.h)
    cursor = [0] * instance.h
    active = list(range(instance.h))
    exhausted = False

    while active:
        still_active = []
        for i in active:
            order = orders[i]
            while cursor[i] < len(order):
                u = int(order[cursor[i]])
                cursor[i] += 1
                if alloc.usage[u] < instance.kappa[u] and not alloc.contains(i, u):
                    alloc.add(i, u)
                    accrued[i] += instance.ctps(i)[u] * instance.cpes[i]
                    break
            else:
                exhausted = True
                continue
            if accrued[i] < instance.budgets[i]:
                still_active.append(i)
        active = still_active

    termination = TERMINATION_NO_FEASIBLE if exhausted else TERMINATION_BUDGETS_REACHED
    return AllocatorResult(alloc, accrued.tolist(), termination=termination)


def myopic_plus(instance, events=None, verbose=False):
    """Per ad, users by δ(u, i) descending (ties to the lower node id), served round-robin"""
    orders = [np.argsort(-instance.ctps(i), kind='stable') for i in range(instance.h)]
    result = _round_robin(instance, orders)
    if verbose:
        print(f"✓ Myopic+ assigned {result.allocation.total_seeds()} seeds ({result.termination})")
    return result


def random_allocation(instance, seed=0, events=None, verbose=False):
    """Round-robin like Myopic+, but each ad walks a seeded random permutation of users"""
    orders = [substream(stream_key(STREAM_ALLOC, seed, i), 0).permutation(instance.n)
              for i in range(instance.h)]
    result = _round_robin(instance, orders)
    if verbose:
        print(f"✓ Random assigned {result.allocation.total_seeds()} seeds ({result.termination})")
    return result
