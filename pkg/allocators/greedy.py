"""
Greedy regret minimization
Repeatedly adds the (user, ad) pair with the largest strict drop in regret
"""

import heapq

import numpy as np

from allocators.base import (TERMINATION_NO_IMPROVEMENT, AllocatorResult, default_events,
                             record_step)
from model.campaign import Allocation
from oracle.spread import EXACT, ExactEstimator, spread_function


def regret_drop(deficit, gain, lam):
    """R(S) - R(S ∪ {x}) for an ad with B' - Π = deficit and marginal revenue gain"""
    return abs(deficit) - abs(deficit - gain) - lam


class _AdState:
    """Seeds, current revenue and cached best candidate of one ad"""

    def __init__(self, instance, i, estimator):
        self.i = i
        self.cpe = float(instance.cpes[i])
        self.budget = float(instance.budgets[i])
        self.spread = spread_function(instance, i, estimator)
        self.seeds = []
        self.revenue = 0.0
        self.version = 0
        self.best = None

    @property
    def deficit(self):
        return self.budget - self.revenue

    def revenue_with(self, x):
        return self.cpe * self.spread(self.seeds + [x]).mean


class _FullScan:
    """Re-evaluates every feasible node after each change to the ad's seed set"""

    def __init__(self, state, instance):
        self.state = state
        self.after = np.full(instance.n, np.nan)

    def refresh(self, alloc, kappa):
        self.after[:] = np.nan
        for u in range(len(self.after)):
            if alloc.usage[u] < kappa[u] and not alloc.contains(self.state.i, u):
                self.after[u] = self.state.revenue_with(u)

    def best(self, alloc, kappa, lam):
        feasible = (alloc.usage < kappa) & ~np.isnan(self.after)
        if not feasible.any():
            return None
        drops = np.full(len(self.after), -np.inf)
        gains = self.after[feasible] - self.state.revenue
        drops[feasible] = regret_drop(self.state.deficit, gains, lam)
        u = int(np.argmax(drops))
        return drops[u], u, float(self.after[u])


class _LazyScan:
    """
    CELF-style lazy evaluation.

    Heap entries carry the last computed marginal gain as an upper bound. The drop is
    unimodal in the gain with its peak at gain = deficit, so drop(min(bound, deficit))
    bounds every node still in the heap.
    """

    def __init__(self, state, instance):
        self.state = state
        self.heap = [(-np.inf, u, -1) for u in range(instance.n)]
        heapq.heapify(self.heap)
        self.after = {}

    def refresh(self, alloc, kappa):
        pass

    def best(self, alloc, kappa, lam):
        state = self.state
        deficit = state.deficit
        found = None
        fresh = []
        while self.heap:
            neg_bound, u, version = self.heap[0]
            if alloc.usage[u] >= kappa[u] or alloc.contains(state.i, u):
                heapq.heappop(self.heap)
                continue
            bound = regret_drop(deficit, min(-neg_bound, max(deficit, 0.0)), lam)
            if found is not None and (bound < found[0] or (bound == found[0] and u > found[1])):
                break
            heapq.heappop(self.heap)
            if version != state.version:
                after = state.revenue_with(u)
                self.after[u] = after
                heapq.heappush(self.heap, (-(after - state.revenue), u, state.version))
                continue
            drop = regret_drop(deficit, -neg_bound, lam)
            fresh.append((neg_bound, u, version))
            if found is None or drop > found[0] or (drop == found[0] and u < found[1]):
                found = (drop, u, self.after[u])
        for entry in fresh:
            heapq.heappush(self.heap, entry)
        return found


def greedy(instance, estimator=EXACT, events=None, verbose=False, log_steps=False):
    """
    Greedy allocation under a spread estimator.

    Exact estimators rescan every node after a change; Monte-Carlo estimators use lazy
    evaluation. Only strict regret decreases are accepted; ties go to the lower ad id,
    then the lower node id.
    """
    events = default_events(events)
    lam = instance.lam
    alloc = Allocation(instance.h, instance.n)
    states = [_AdState(instance, i, estimator) for i in range(instance.h)]
    scan_type = _FullScan if isinstance(estimator, ExactEstimator) else _LazyScan
    scans = [scan_type(state, instance) for state in states]
    for scan in scans:
        scan.refresh(alloc, instance.kappa)

    regrets = [state.budget for state in states]
    result = AllocatorResult(alloc, [0.0] * instance.h)

    if verbose:
        print(f"\n{'='*60}")
        print(f"GREEDY ALLOCATION ({estimator.name})")
        print(f"{'='*60}")

    while True:
        choice = None
        for state, scan in zip(states, scans):
            cached = state.best
            if cached is None or alloc.usage[cached[1]] >= instance.kappa[cached[1]]:
                cached = scan.best(alloc, instance.kappa, lam)
                state.best = cached
            if cached is None or not cached[0] > 0:
                continue
            if choice is None or cached[0] > choice[1][0]:
                choice = (state, cached)

        if choice is None:
            break

        state, (drop, u, after) = choice
        before = sum(regrets)
        alloc.add(state.i, u)
        state.seeds.append(u)
        state.revenue = after
        state.version += 1
        state.best = None
        regrets[state.i] = abs(state.budget - after) + lam * len(state.seeds)
        scans[state.i].refresh(alloc, instance.kappa)

        record_step(result, events, instance.ads[state.i].id, state.i, u,
                    before, sum(regrets), log_steps)
        if verbose:
            print(f"  → ad {instance.ads[state.i].id} ← user {u} "
                  f"(regret {before:.4f} → {sum(regrets):.4f})")

    result.revenues = [state.revenue for state in states]
    result.termination = TERMINATION_NO_IMPROVEMENT
    if verbose:
        print(f"✓ Greedy finished: {alloc.total_seeds()} seeds, regret {sum(regrets):.4f}")
    return result
