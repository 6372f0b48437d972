"""
TIRM allocator
Greedy regret descent over RR-set coverage with per-ad seed-size estimates that grow
the sample pool as seed sets fill up
"""

import math

import numpy as np

from allocators.base import (TERMINATION_NO_IMPROVEMENT, AllocatorResult, default_events,
                             record_step)
from infrastructure.workers import shared_pool
from model.campaign import Allocation
from sampling.bounds import SampleParams, estimate_opt_lb, pilot_sets, theta_bound
from sampling.rr_sets import RrCollection, extend, remove_covered

DEFAULT_PILOT_SIZE = 2000


class TirmAdState:
    """
    Allocation state of one ad.

    `log` holds [node, coverage] pairs in selection order. Coverage is attributed
    disjointly: a set is credited to the first logged seed that contains it and is then
    removed, so the coverages sum to at most theta.
    """

    def __init__(self, instance, i, params, seed, pilot_size, max_theta=None, pool=None):
        self.i = i
        self.ad_id = instance.ads[i].id
        self.view = instance.view(i)
        self.ctps = instance.ctps(i)
        self.cpe = float(instance.cpes[i])
        self.budget = float(instance.budgets[i])
        self.lam = instance.lam
        self.n = instance.n
        self.params = params
        self.seed = seed
        self.pilot_size = pilot_size
        self.max_theta = max_theta
        self.pool = pool

        self.seeds = []
        self.in_seeds = np.zeros(self.n, dtype=bool)
        self.log = []
        self.s = 1
        self.pi_hat = 0.0
        self.regret_hat = self.budget
        self._pilot = None
        self._opt_lb = {}

        self.coll = RrCollection(self.view, 'rr', seed=seed, stream=i)
        self.theta = 0
        self.capped = False
        self.cap_reported = False
        self.grow_to(self.sample_target(self.s))

    def opt_lb(self, s):
        if s not in self._opt_lb:
            if self._pilot is None:
                self._pilot = pilot_sets(self.view, self.pilot_size, self.seed, self.i)
            self._opt_lb[s] = estimate_opt_lb(self.view, s, self.pilot_size, pilot=self._pilot)
        return self._opt_lb[s]

    def sample_target(self, s):
        target = theta_bound(s, self.params, self.n, self.opt_lb(s))
        if self.max_theta is not None and target > self.max_theta:
            self.capped = True
            target = max(self.theta, self.max_theta)
        return target

    def grow_to(self, target):
        """Sample up to `target` sets; returns the previous theta"""
        previous = self.theta
        if target > previous:
            extend(self.coll, target - previous, pool=self.pool)
            self.theta = self.coll.theta
        return previous

    def gain(self, v, cov):
        """Revenue estimate for coverage cov of node v: cpe * n * δ(v) * cov / θ"""
        return self.cpe * self.n * float(self.ctps[v]) * cov / self.theta

    def recompute(self):
        self.pi_hat = sum(self.gain(v, cov) for v, cov in self.log)
        self.regret_hat = abs(self.budget - self.pi_hat) + self.lam * len(self.seeds)
        return self.pi_hat

    def report_cap(self, events):
        if self.capped and not self.cap_reported:
            self.cap_reported = True
            print(f"⚠️  Ad {self.ad_id}: sample count capped at {self.max_theta}")
            events.emit('THETA_CAPPED', ad=self.ad_id, s=self.s, theta=self.theta)

    def add_seed(self, v, cov):
        self.seeds.append(v)
        self.in_seeds[v] = True
        self.log.append([v, cov])
        remove_covered(self.coll, v)
        self.recompute()


def select_best_node(state, usage, kappa):
    """
    Node with the largest residual coverage among users below their attention bound and
    not already seeding this ad; ties go to the lower id. None when nothing is covered.
    """
    eligible = (usage < kappa) & ~state.in_seeds
    if not eligible.any():
        return None
    coverage = np.where(eligible, state.coll.residual, -1)
    v = int(np.argmax(coverage))
    if coverage[v] <= 0:
        return None
    return v, int(coverage[v])


def update_estimates(state, since):
    """
    Credit sets sampled from id `since` onward to the logged seeds in selection order,
    removing each set as it is credited, then re-derive Π̂ under the current theta.
    """
    for entry in state.log:
        entry[1] += remove_covered(state.coll, entry[0], since)
    return state.recompute()


def tirm(instance, params=None, seed=0, pilot_size=DEFAULT_PILOT_SIZE, max_theta=None,
         workers=1, events=None, verbose=False, log_steps=False, pool=None):
    """
    Two-phase iterative regret minimization over plain RR-sets with δ-scaled coverage.

    Every ad samples through one worker pool: `pool` when given, otherwise one opened
    for this call with `workers` processes.
    """
    with shared_pool(workers, pool) as active:
        return _tirm(instance, params or SampleParams(), seed, pilot_size, max_theta, active,
                     events, verbose, log_steps)


def _tirm(instance, params, seed, pilot_size, max_theta, pool, events, verbose, log_steps):
    events = default_events(events)
    alloc = Allocation(instance.h, instance.n)
    result = AllocatorResult(alloc, [0.0] * instance.h)

    if verbose:
        print(f"\n{'='*60}")
        print(f"TIRM ALLOCATION (ε={params.epsilon}, ℓ={params.ell})")
        print(f"{'='*60}")

    if instance.n == 0:
        result.theta = [0] * instance.h
        return result

    states = []
    for i in range(instance.h):
        state = TirmAdState(instance, i, params, seed, pilot_size, max_theta, pool)
        states.append(state)
        if verbose:
            print(f"✓ Ad {state.ad_id}: θ={state.theta}")
        state.report_cap(events)

    kappa = instance.kappa
    while True:
        choice = None
        for state in states:
            picked = select_best_node(state, alloc.usage, kappa)
            if picked is None:
                continue
            v, cov = picked
            after = abs(state.budget - (state.pi_hat + state.gain(v, cov))) \
                + state.lam * (len(state.seeds) + 1)
            drop = state.regret_hat - after
            if drop > 0 and (choice is None or drop > choice[1]):
                choice = (state, drop, v, cov)

        if choice is None:
            break

        state, drop, v, cov = choice
        before = sum(s.regret_hat for s in states)
        fraction = cov / state.theta
        alloc.add(state.i, v)
        state.add_seed(v, cov)
        after_total = sum(s.regret_hat for s in states)

        if len(state.seeds) == state.s:
            unit = state.cpe * state.n * float(state.ctps[v]) * fraction
            step = int(math.floor(state.regret_hat / unit)) if unit > 0 else 1
            state.s = min(state.n, state.s + max(1, step))
            previous = state.grow_to(max(state.sample_target(state.s), state.theta))
            if state.theta > previous:
                update_estimates(state, previous)
                events.emit('RESAMPLE', ad=state.ad_id, s=state.s,
                            theta_before=previous, theta_after=state.theta)
                if verbose:
                    print(f"  ↻ ad {state.ad_id}: s={state.s}, θ {previous} → {state.theta}")
            state.report_cap(events)

        record_step(result, events, state.ad_id, state.i, v, before, after_total, log_steps)
        if verbose:
            print(f"  → ad {state.ad_id} ← user {v} (regret {before:.4f} → {after_total:.4f})")

    result.revenues = [state.pi_hat for state in states]
    result.theta = [state.theta for state in states]
    result.collections = [state.coll for state in states]
    result.termination = TERMINATION_NO_IMPROVEMENT
    if verbose:
        print(f"✓ TIRM finished: {alloc.total_seeds()} seeds, "
              f"internal regret {sum(s.regret_hat for s in states):.4f}")
    return result
