"""
Revenue and regret arithmetic
"""

from dataclasses import dataclass

from oracle.spread import EXACT, spread_function


def revenue(spread, cpe):
    """Π_i = cpe(i) * σ_i(S_i); accepts a SpreadEstimate or a plain number"""
    mean = getattr(spread, 'mean', spread)
    return float(cpe) * float(mean)


def regret_single(budget, pi, lam, seeds):
    """|B' - Π| + λ|S|"""
    return abs(budget - pi) + lam * seeds


@dataclass(frozen=True)
class AdRegret:
    ad_id: int
    revenue: float
    budget: float
    budget_regret: float
    seeds: int
    seed_regret: float

    @property
    def regret(self):
        return self.budget_regret + self.seed_regret

    @property
    def overshoot(self):
        return self.revenue > self.budget


@dataclass(frozen=True)
class RegretReport:
    ads: tuple
    total: float

    def as_records(self):
        return [{'ad': a.ad_id, 'revenue': a.revenue, 'budget': a.budget,
                 'budget_regret': a.budget_regret, 'seeds': a.seeds,
                 'seed_regret': a.seed_regret, 'regret': a.regret} for a in self.ads]


def regret_total(instance, alloc, revenues):
    """Per-ad and overall regret of an allocation given per-ad revenues"""
    if len(revenues) != instance.h:
        raise ValueError(f"expected {instance.h} revenues, got {len(revenues)}")
    rows = []
    for i, ad in enumerate(instance.ads):
        budget = float(instance.budgets[i])
        pi = float(revenues[i])
        seeds = alloc.seed_count(i)
        rows.append(AdRegret(ad_id=ad.id, revenue=pi, budget=budget,
                             budget_regret=abs(budget - pi), seeds=seeds,
                             seed_regret=instance.lam * seeds))
    return RegretReport(tuple(rows), sum(r.regret for r in rows))


def exact_revenues(instance, alloc, estimator=None):
    """Per-ad revenues of an allocation under an oracle (exact by default)"""
    estimator = estimator or EXACT
    return [revenue(spread_function(instance, i, estimator)(alloc.seed_sets[i]), instance.cpes[i])
            if alloc.seed_sets[i] else 0.0
            for i in range(instance.h)]
