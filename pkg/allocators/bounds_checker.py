"""
Regret bound checker
Brute-forces the optimum on tiny instances and checks Greedy's guarantees against it
"""

import math
from dataclasses import dataclass

import numpy as np

from model.errors import BruteForceCapError
from oracle.regret import exact_revenues, regret_total
from oracle.spread import exact_spread

PASS = 'pass'
FAIL = 'fail'
NOT_MET = 'precondition-not-met'

DEFAULT_BRUTE_FORCE_BUDGET = 1 << 14
BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BoundCheck:
    name: str
    status: str
    bound: float
    regret: float
    detail: str = ''


@dataclass(frozen=True)
class BoundReport:
    p: tuple
    p_max: float
    s_opt: tuple
    optimal_regret: float
    allocator_regret: float
    total_budget: float
    checks: tuple

    def status(self, name):
        return next(c.status for c in self.checks if c.name == name)


def _mask_bits(n):
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.int64)


def subset_revenues(instance, i, bits):
    """Exact revenue of every subset of V for ad i, indexed by bitmask"""
    view, ctps, cpe = instance.view(i), instance.ctps(i), float(instance.cpes[i])
    revenues = np.zeros(len(bits))
    for mask in range(1, len(bits)):
        seeds = np.nonzero(bits[mask])[0].tolist()
        revenues[mask] = cpe * exact_spread(view, ctps, seeds).mean
    return revenues


def optimal_regret(instance, regrets, bits):
    """
    Minimum total regret over attention-feasible allocations.

    Dynamic programme over ads; the state is the usage vector restricted to users whose
    attention bound is below h (the others can never be over-subscribed).
    """
    kappa = instance.kappa
    constrained = np.nonzero(kappa < instance.h)[0]
    if len(constrained) == 0:
        return float(sum(r.min() for r in regrets))

    sub_bits = bits[:, constrained]
    limit = kappa[constrained]
    frontier = {tuple([0] * len(constrained)): 0.0}
    for ad_regrets in regrets:
        nxt = {}
        for usage, value in frontier.items():
            counts = np.asarray(usage) + sub_bits
            valid = np.nonzero(np.all(counts <= limit, axis=1))[0]
            for mask in valid:
                key = tuple(counts[mask].tolist())
                total = value + ad_regrets[mask]
                if key not in nxt or total < nxt[key]:
                    nxt[key] = total
        frontier = nxt
    return float(min(frontier.values()))


def check_bounds(instance, result, brute_force_budget=DEFAULT_BRUTE_FORCE_BUDGET):
    """
    Evaluate the one-third, p_max and general regret bounds for an allocator result.

    Every check reports pass, fail, or precondition-not-met. The allocator's regret is
    re-measured with the exact oracle.
    """
    n, h = instance.n, instance.h
    if h * (1 << n) > brute_force_budget:
        raise BruteForceCapError(
            f"brute force needs {h} x 2^{n} subset evaluations, budget is {brute_force_budget}")

    bits = _mask_bits(n)
    sizes = bits.sum(axis=1)
    budgets = instance.budgets
    lam = instance.lam
    revenues = [subset_revenues(instance, i, bits) for i in range(h)]
    regrets = [np.abs(budgets[i] - revenues[i]) + lam * sizes for i in range(h)]

    singles = [revenues[i][1 << np.arange(n)] if n else np.zeros(1) for i in range(h)]
    p = tuple(float(singles[i].max() / budgets[i]) for i in range(h))
    p_max = max(p, default=0.0)
    s_opt = []
    for i in range(h):
        reaching = sizes[revenues[i] >= budgets[i]]
        s_opt.append(int(reaching.min()) if len(reaching) else None)

    optimum = optimal_regret(instance, regrets, bits)
    measured = regret_total(instance, result.allocation,
                            exact_revenues(instance, result.allocation)).total
    total_budget = float(budgets.sum())
    in_regime = all(0.0 < value < 1.0 for value in p)

    def judge(name, precondition, bound, why=''):
        if not precondition:
            return BoundCheck(name, NOT_MET, bound, measured, why)
        status = PASS if measured <= bound + BOUND_TOLERANCE else FAIL
        return BoundCheck(name, status, bound, measured)

    checks = []

    third = total_budget / 3.0
    checks.append(judge('one_third', lam == 0 and optimum <= third + BOUND_TOLERANCE, third,
                        'needs lambda = 0 and an allocation within B/3'))

    tight = min(p_max / 2.0, 1.0 - p_max) * total_budget
    checks.append(judge('p_max', lam == 0 and in_regime and optimum <= tight + BOUND_TOLERANCE, tight,
                        'needs lambda = 0, every p_i in (0, 1) and an allocation within the bound'))

    min_direct = min((float((instance.ctps(i) * instance.cpes[i]).min()) for i in range(h)),
                     default=0.0)
    margins = [p[i] / 2.0 - lam / (2.0 * budgets[i]) for i in range(h)]
    general_ok = (bool(np.all(instance.kappa >= h)) and lam <= min_direct and in_regime
                  and all(m > 0 for m in margins) and all(s is not None for s in s_opt))
    general = float('nan')
    if general_ok:
        general = sum((p[i] * budgets[i] + lam) / 2.0 for i in range(h)) + lam * sum(
            1 + s_opt[i] * math.ceil(math.log(1.0 / margins[i])) for i in range(h))
    checks.append(judge('general', general_ok, general,
                        'needs kappa >= h, lambda <= min δ·cpe, p_i in (0, 1) and reachable budgets'))

    return BoundReport(p, p_max, tuple(s_opt), optimum, measured, total_budget, tuple(checks))
