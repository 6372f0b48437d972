"""
Sample-size bound and OPT lower bound
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from sampling.rng import STREAM_PILOT, stream_key
from sampling.rr_sets import _sample_batch

PILOT_DEFLATION = 1.5


@dataclass(frozen=True)
class SampleParams:
    epsilon: float = 0.1
    ell: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if not self.ell > 0.0:
            raise ValueError("ell must be positive")


def log_binomial(n, s):
    return float(gammaln(n + 1) - gammaln(s + 1) - gammaln(n - s + 1))


def theta_bound(s, params, n, opt_lb):
    """
    L(s, ε) = (8 + 2ε) n (ℓ ln n + ln C(n, s) + ln 2) / (OPT_s ε²), rounded up.

    Natural logarithms throughout.
    """
    if not opt_lb > 0:
        raise ValueError("opt_lb must be positive")
    if not 1 <= s <= n:
        raise ValueError(f"s must be in [1, {n}]")
    eps = params.epsilon
    numerator = (8.0 + 2.0 * eps) * n * (params.ell * math.log(n) + log_binomial(n, s) + math.log(2.0))
    return int(math.ceil(numerator / (opt_lb * eps * eps)))


def pilot_sets(view, pilot_size, seed=0, stream=0):
    """Plain RR-sets from the pilot stream, independent of the allocator's collection"""
    if pilot_size < 1:
        raise ValueError("pilot_size must be at least 1")
    key = stream_key(STREAM_PILOT, seed, stream)
    batch = _sample_batch(view.node_count, view.in_ptr, view.in_src, view.in_p, None, key, 0, pilot_size)
    return [members for _, members in batch]


def greedy_max_cover(sets, n, s):
    """Fraction of sets covered by s nodes picked greedily (ties to the lower id)"""
    if not sets:
        return 0.0
    lengths = np.fromiter((len(m) for m in sets), dtype=np.int64, count=len(sets))
    flat = np.concatenate(sets)
    owner = np.repeat(np.arange(len(sets)), lengths)
    counts = np.bincount(flat, minlength=n)
    covered = np.zeros(len(sets), dtype=bool)

    for _ in range(s):
        v = int(np.argmax(counts))
        if counts[v] == 0:
            break
        hit = np.unique(owner[flat == v])
        hit = hit[~covered[hit]]
        covered[hit] = True
        for k in hit:
            counts[sets[k]] -= 1
    return float(covered.sum()) / len(sets)


def estimate_opt_lb(view, s, pilot_size, seed=0, stream=0, pilot=None):
    """
    Lower bound on OPT_s under plain IC.

    Greedy max-cover over pilot RR-sets, deflated by 1.5, floored at s (every seed
    activates itself) and capped at n.
    """
    if pilot_size < 1:
        raise ValueError("pilot_size must be at least 1")
    n = view.node_count
    if pilot is None:
        pilot = pilot_sets(view, pilot_size, seed, stream)
    fraction = greedy_max_cover(pilot, n, s)
    return float(min(n, max(s, n * fraction / PILOT_DEFLATION)))
