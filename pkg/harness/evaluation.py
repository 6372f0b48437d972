"""
Neutral Monte-Carlo evaluation of final allocations
"""

import math
from dataclasses import asdict, dataclass

import pandas as pd

from infrastructure.workers import shared_pool
from oracle.regret import revenue
from oracle.spread import mc_spread

DEFAULT_EVAL_RUNS = 10000
# Evaluation streams sit far away from the ones allocators use for their own estimates
EVAL_STREAM_OFFSET = 1 << 20

REPORT_COLUMNS = ['allocator', 'ad', 'budget', 'revenue', 'stderr', 'budget_regret',
                  'seeds', 'theta', 'wall_ms']


@dataclass(frozen=True)
class ReportRow:
    allocator: str
    ad: int
    budget: float
    revenue: float
    stderr: float
    budget_regret: float
    seeds: int
    theta: int
    wall_ms: float

    def __post_init__(self):
        for name in ('budget', 'revenue', 'stderr', 'budget_regret', 'wall_ms'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"report field {name} is not finite")


def evaluate(instance, alloc, runs=DEFAULT_EVAL_RUNS, seed=0, workers=1,
             allocator='', theta=None, wall_ms=0.0, pool=None):
    """One row per ad: MC revenue of its seed set, budget-regret against B', seed count"""
    rows = []
    with shared_pool(workers, pool) as active:
        for i, ad in enumerate(instance.ads):
            seeds = alloc.seed_sets[i]
            estimate = mc_spread(instance.view(i), instance.ctps(i), seeds, runs, seed,
                                 stream=EVAL_STREAM_OFFSET + i, pool=active)
            cpe = float(instance.cpes[i])
            pi = revenue(estimate, cpe)
            budget = float(instance.budgets[i])
            rows.append(ReportRow(
                allocator=allocator,
                ad=ad.id,
                budget=budget,
                revenue=pi,
                stderr=cpe * estimate.stderr,
                budget_regret=abs(budget - pi),
                seeds=len(seeds),
                theta=int(theta[i]) if theta else 0,
                wall_ms=float(wall_ms),
            ))
    return rows


def rows_frame(rows, extra=None):
    """DataFrame in report column order; `extra` columns go first"""
    frame = pd.DataFrame([asdict(r) for r in rows], columns=REPORT_COLUMNS)
    for position, (name, value) in enumerate((extra or {}).items()):
        frame.insert(position, name, value)
    return frame


def write_report(rows, path):
    rows_frame(rows).to_csv(path, index=False)


def total_regret(rows, lam):
    return sum(r.budget_regret + lam * r.seeds for r in rows)
