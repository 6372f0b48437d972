"""
Spread oracles
Exact expected clicks by possible-world enumeration, and Monte-Carlo estimation
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from infrastructure.workers import WorkerPool, shared_pool
from model.errors import OracleCapError
from sampling.rng import STREAM_MC, stream_key, substream

EXACT_COIN_CAP = 24
WORLD_CHUNK = 1 << 14
MIN_RUNS_PER_WORKER = 256


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    stderr: float = 0.0
    runs: int = 0

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")
        if self.runs == 0 and self.stderr != 0:
            raise ValueError("exact estimates carry no stderr")


def _reachable_arcs(view, seeds):
    """Nodes reachable from seeds over arcs with p > 0, and the arcs leaving them"""
    seen = set(seeds)
    queue = deque(seeds)
    arcs = []
    while queue:
        u = queue.popleft()
        lo, hi = view.out_ptr[u], view.out_ptr[u + 1]
        for k in range(lo, hi):
            if view.out_p[k] <= 0.0:
                continue
            v = int(view.out_dst[k])
            arcs.append((u, v, float(view.out_p[k])))
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return sorted(seen), arcs


def exact_spread(view, ctps, seeds):
    """
    σ_i(S) summed over every live/blocked outcome of the arcs reachable from S.

    Seed acceptance coins are integrated analytically: in a fixed edge world node x is
    clicked with probability 1 - prod(1 - δ_s) over the seeds s that reach x. Arcs with
    p = 1 are always live and take no coin. Refuses when coins exceed EXACT_COIN_CAP.
    """
    seeds = sorted({int(s) for s in seeds})
    if not seeds:
        return SpreadEstimate(0.0)

    nodes, arcs = _reachable_arcs(view, seeds)
    random_arcs = [a for a in arcs if a[2] < 1.0]
    coins = len(random_arcs) + len(seeds)
    if coins > EXACT_COIN_CAP:
        raise OracleCapError(
            f"exact enumeration needs {coins} coins ({len(random_arcs)} arcs + {len(seeds)} seeds), "
            f"cap is {EXACT_COIN_CAP}")

    local = {u: k for k, u in enumerate(nodes)}
    fixed = [(local[u], local[v]) for u, v, p in arcs if p >= 1.0]
    rand_src = np.array([local[u] for u, _, _ in random_arcs], dtype=np.int64)
    rand_dst = np.array([local[v] for _, v, _ in random_arcs], dtype=np.int64)
    rand_p = np.array([p for _, _, p in random_arcs], dtype=np.float64)
    seed_local = [local[s] for s in seeds]
    fail = 1.0 - np.asarray(ctps, dtype=np.float64)[seeds]

    m = len(random_arcs)
    bits = np.arange(m, dtype=np.int64)
    total = 0.0
    for start in range(0, 1 << m, WORLD_CHUNK):
        worlds = np.arange(start, min(start + WORLD_CHUNK, 1 << m), dtype=np.int64)
        live = ((worlds[:, None] >> bits) & 1).astype(bool)
        weight = np.prod(np.where(live, rand_p, 1.0 - rand_p), axis=1)

        not_clicked = np.ones((len(worlds), len(nodes)))
        for s_local, s_fail in zip(seed_local, fail):
            reach = np.zeros((len(worlds), len(nodes)), dtype=bool)
            reach[:, s_local] = True
            for _ in range(len(nodes)):
                before = reach.sum()
                for u, v in fixed:
                    reach[:, v] |= reach[:, u]
                for k in range(m):
                    reach[:, rand_dst[k]] |= reach[:, rand_src[k]] & live[:, k]
                if reach.sum() == before:
                    break
            not_clicked *= np.where(reach, s_fail, 1.0)

        total += float(weight @ (len(nodes) - not_clicked.sum(axis=1)))

    return SpreadEstimate(total)


def _mc_batch(out_ptr, out_dst, out_p, seeds, seed_ctps, key, start, stop):
    counts = np.zeros(stop - start, dtype=np.int64)
    for offset, r in enumerate(range(start, stop)):
        rng = substream(key, r)
        accepted = rng.random(len(seeds)) < seed_ctps
        active = {int(s) for s, ok in zip(seeds, accepted) if ok}
        queue = deque(sorted(active))
        while queue:
            u = queue.popleft()
            lo, hi = out_ptr[u], out_ptr[u + 1]
            if lo == hi:
                continue
            live = rng.random(hi - lo) < out_p[lo:hi]
            for v in out_dst[lo:hi][live]:
                v = int(v)
                if v not in active:
                    active.add(v)
                    queue.append(v)
        counts[offset] = len(active)
    return counts


def mc_run_counts(view, ctps, seeds, runs, seed, stream=0, workers=1, pool=None):
    """Activated-node count of every run, in run order; `pool` overrides `workers`"""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    seeds = np.array(sorted({int(s) for s in seeds}), dtype=np.int64)
    if len(seeds) == 0:
        return np.zeros(runs, dtype=np.int64)

    key = stream_key(STREAM_MC, seed, stream)
    seed_ctps = np.asarray(ctps, dtype=np.float64)[seeds]
    args = (view.out_ptr, view.out_dst, view.out_p, seeds, seed_ctps, key)
    with shared_pool(workers, pool) as active:
        return np.concatenate(active.map_ranges(_mc_batch, args, 0, runs, MIN_RUNS_PER_WORKER))


def mc_spread(view, ctps, seeds, runs, seed, stream=0, workers=1, pool=None):
    """
    Monte-Carlo σ_i(S): each run flips seed acceptance coins, then cascades breadth-first.

    Run r draws from substream (seed, stream, r), so the result depends on neither
    scheduling nor worker count.
    """
    counts = mc_run_counts(view, ctps, seeds, runs, seed, stream, workers, pool)
    mean = float(np.mean(counts))
    stderr = float(np.std(counts, ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return SpreadEstimate(mean, stderr, runs)


@dataclass(frozen=True)
class ExactEstimator:
    name = 'exact'

    def estimate(self, view, ctps, seeds, stream=0):
        return exact_spread(view, ctps, seeds)


class MonteCarloEstimator:
    """MC oracle with a fixed run count; owns one worker pool until closed"""

    name = 'mc'

    def __init__(self, runs=10000, seed=0, workers=1, pool=None):
        self.runs = runs
        self.seed = seed
        self._owned = pool is None
        self.pool = WorkerPool(workers) if pool is None else pool

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def close(self):
        if self._owned:
            self.pool.close()

    def estimate(self, view, ctps, seeds, stream=0):
        return mc_spread(view, ctps, seeds, self.runs, self.seed, stream, pool=self.pool)


EXACT = ExactEstimator()


def spread_function(instance, i, estimator=EXACT):
    """S -> SpreadEstimate for ad index i; MC streams are keyed by the ad index"""
    view, ctps = instance.view(i), instance.ctps(i)

    def spread(seeds):
        return estimator.estimate(view, ctps, seeds, stream=i)

    return spread


def marginal_gain(view, ctps, seeds, x, estimator=EXACT, cpe=1.0, stream=0):
    """cpe * (σ(S ∪ {x}) - σ(S))"""
    seeds = set(int(s) for s in seeds)
    if int(x) in seeds:
        raise ValueError(f"node {x} is already a seed")
    before = estimator.estimate(view, ctps, seeds, stream).mean if seeds else 0.0
    after = estimator.estimate(view, ctps, seeds | {int(x)}, stream).mean
    return cpe * (after - before)


@dataclass(frozen=True)
class RegimeDiagnostics:
    p: tuple
    p_max: float
    best_single: tuple
    out_of_regime: tuple


def diagnostics_p(instance, estimator=EXACT):
    """
    p_i = max_x Π_i({x}) / B'_i per ad, p_max over ads.

    Ads whose p_i falls outside (0, 1) are listed in out_of_regime.
    """
    p, best = [], []
    for i in range(instance.h):
        spread = spread_function(instance, i, estimator)
        top = max((spread([x]).mean for x in range(instance.n)), default=0.0)
        revenue = instance.cpes[i] * top
        best.append(float(revenue))
        p.append(float(revenue / instance.budgets[i]))
    flagged = tuple(i for i, value in enumerate(p) if not 0.0 < value < 1.0)
    return RegimeDiagnostics(tuple(p), max(p, default=0.0), tuple(best), flagged)
