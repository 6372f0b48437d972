"""
Synthetic campaigns and attention bounds
"""

import numpy as np

from model.campaign import AdSpec, CtpSource
from sampling.rng import STREAM_GEN, stream_key, substream

DEFAULT_BUDGETS = (200.0, 600.0)
DEFAULT_CPES = (5.0, 6.0)
DEFAULT_CTP_RANGE = (0.01, 0.03)
DEFAULT_MASS = 0.91


def topic_mixture(i, K, mass=DEFAULT_MASS):
    """`mass` on topic i mod K, the rest spread evenly over the other topics"""
    if K == 1:
        return (1.0,)
    rest = (1.0 - mass) / (K - 1)
    gamma = [rest] * K
    gamma[i % K] = mass
    return tuple(gamma)


def gen_campaign(h, K, seed=0, budgets=DEFAULT_BUDGETS, cpes=DEFAULT_CPES,
                 ctp_range=DEFAULT_CTP_RANGE, mass=DEFAULT_MASS):
    """h ads with ids 0..h-1; budgets and CPEs uniform over their ranges, uniform CTPs"""
    rng = substream(stream_key(STREAM_GEN, seed, 2), 0)
    budget_draws = rng.uniform(budgets[0], budgets[1], h)
    cpe_draws = rng.uniform(cpes[0], cpes[1], h)
    ads = []
    for i in range(h):
        ads.append(AdSpec(
            id=i,
            gamma=topic_mixture(i, K, mass),
            budget=float(budget_draws[i]),
            cpe=float(cpe_draws[i]),
            ctp=CtpSource.uniform(ctp_range[0], ctp_range[1], seed),
        ))
    return ads


def uniform_attention(n, kappa):
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    return np.full(n, int(kappa), dtype=np.int64)
