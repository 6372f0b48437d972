"""
Spread oracle and regret arithmetic tests
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from generators.fixtures import toy_instance
from infrastructure.workers import WorkerPool
from model.campaign import AdSpec, Allocation, CtpSource, Instance
from model.errors import OracleCapError
from model.topic_graph import TopicGraph, collapse
from oracle.regret import exact_revenues, regret_single, regret_total, revenue
from oracle.spread import (EXACT, MonteCarloEstimator, SpreadEstimate, diagnostics_p,
                           exact_spread, marginal_gain, mc_run_counts, mc_spread)

A_CLICKS = 5.5440725
B_CLICKS = 6.300241


def _ad(i, budget=1.0, cpe=1.0, delta=1.0):
    return AdSpec(id=i, gamma=(1.0,), budget=budget, cpe=cpe, ctp=CtpSource.constant(delta))


def _fixture_clicks(allocation):
    instance = toy_instance()[0]
    return sum(exact_spread(instance.view(i), instance.ctps(i), allocation.seed_sets[i]).mean
               for i in range(instance.h))


def test_exact_spread_allocation_a():
    _, alloc_a, _ = toy_instance()
    clicks = _fixture_clicks(alloc_a)
    assert 5.50 <= clicks <= 5.60
    assert abs(clicks - A_CLICKS) < 1e-6


def test_exact_spread_allocation_b():
    _, _, alloc_b = toy_instance()
    clicks = _fixture_clicks(alloc_b)
    assert 6.25 <= clicks <= 6.35
    assert abs(clicks - B_CLICKS) < 1e-6


def test_exact_spread_trivial_cases():
    graph = TopicGraph.from_arcs(1, 1, [])
    view = collapse(graph, (1.0,))
    assert abs(exact_spread(view, np.array([0.7]), [0]).mean - 0.7) < 1e-12
    assert exact_spread(view, np.array([0.7]), []).mean == 0.0
    assert exact_spread(view, np.array([0.7]), []) == SpreadEstimate(0.0)


def test_exact_spread_certain_arcs_take_no_coins():
    # A 30-node chain of certain arcs still enumerates a single world
    n = 30
    graph = TopicGraph.from_arcs(n, 1, [(u, u + 1, [1.0]) for u in range(n - 1)])
    value = exact_spread(collapse(graph, (1.0,)), np.full(n, 0.5), [0]).mean
    assert abs(value - 0.5 * n) < 1e-9


def test_exact_spread_refuses_large_worlds():
    n = 30
    graph = TopicGraph.from_arcs(n, 1, [(u, u + 1, [0.5]) for u in range(n - 1)])
    view = collapse(graph, (1.0,))
    try:
        exact_spread(view, np.ones(n), [0])
    except OracleCapError as e:
        assert 'cap' in str(e)
    else:
        raise AssertionError("expected OracleCapError")


def test_exact_spread_cap_counts_seed_coins():
    n = 40
    graph = TopicGraph.from_arcs(n, 1, [(u, u + 1, [1.0]) for u in range(30, n - 1)])
    view = collapse(graph, (1.0,))
    ctps = np.full(n, 0.5)
    assert exact_spread(view, ctps, range(24)).mean == 12.0
    assert exact_spread(view, ctps, list(range(23)) + [30]).mean == 11.5 + 0.5 * 10
    try:
        exact_spread(view, ctps, range(25))
    except OracleCapError as e:
        assert '0 arcs + 25 seeds' in str(e)
    else:
        raise AssertionError("expected OracleCapError")


def test_marginal_gain_of_hub():
    instance, _, _ = toy_instance()
    gain = marginal_gain(instance.view(0), instance.ctps(0), [], 2)
    assert abs(gain - 1.88775) < 1e-9
    try:
        marginal_gain(instance.view(0), instance.ctps(0), [2], 2)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for a repeated seed")


def test_click_probabilities_scale_plain_cascade_gains():
    # Adding x scales x's own plain-cascade contribution by its click probability
    instance, _, _ = toy_instance()
    view = instance.view(0)
    ones = np.ones(instance.n)
    seeds = [0]
    for x in (1, 2, 3, 5):
        plain = exact_spread(view, ones, seeds + [x]).mean - exact_spread(view, ones, seeds).mean
        with_ctp = exact_spread(view, np.where(np.arange(6) == x, 0.3, 1.0), seeds + [x]).mean \
            - exact_spread(view, ones, seeds).mean
        assert abs(with_ctp - 0.3 * plain) < 1e-9


def test_mc_spread_matches_exact():
    instance, alloc_a, _ = toy_instance()
    runs = 20000
    estimate = mc_spread(instance.view(0), instance.ctps(0), alloc_a.seed_sets[0], runs, seed=5)
    assert estimate.runs == runs
    assert estimate.stderr > 0
    assert abs(estimate.mean - A_CLICKS) <= 4 * estimate.stderr


def test_mc_spread_without_propagation():
    graph = TopicGraph.from_arcs(5, 1, [(0, 1, [0.0]), (1, 2, [0.0])])
    view = collapse(graph, (1.0,))
    estimate = mc_spread(view, np.ones(5), [0, 1, 4], runs=50, seed=1)
    assert estimate.mean == 3.0
    assert estimate.stderr == 0.0
    assert mc_spread(view, np.ones(5), [], runs=10, seed=1).mean == 0.0


def test_mc_runs_are_reproducible():
    instance, _, alloc_b = toy_instance()
    view, ctps = instance.view(0), instance.ctps(0)
    first = mc_run_counts(view, ctps, alloc_b.seed_sets[0], 600, seed=9)
    second = mc_run_counts(view, ctps, alloc_b.seed_sets[0], 600, seed=9)
    other = mc_run_counts(view, ctps, alloc_b.seed_sets[0], 600, seed=10)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_mc_runs_independent_of_worker_count():
    instance, alloc_a, _ = toy_instance()
    view, ctps = instance.view(0), instance.ctps(0)
    serial = mc_run_counts(view, ctps, alloc_a.seed_sets[0], 1024, seed=2, workers=1)
    parallel = mc_run_counts(view, ctps, alloc_a.seed_sets[0], 1024, seed=2, workers=2)
    assert np.array_equal(serial, parallel)


def test_estimators_share_an_interface():
    instance, _, _ = toy_instance()
    view, ctps = instance.view(0), instance.ctps(0)
    assert EXACT.estimate(view, ctps, [2]).runs == 0
    mc = MonteCarloEstimator(runs=200, seed=4)
    assert mc.estimate(view, ctps, [2], stream=1).runs == 200
    assert mc.estimate(view, ctps, [2], stream=1) == mc.estimate(view, ctps, [2], stream=1)


def test_diagnostics_flag_oversized_singletons():
    instance, _, _ = toy_instance()
    diag = diagnostics_p(instance)
    assert abs(diag.p[0] - 1.88775 / 4) < 1e-9
    assert abs(diag.p[3] - 1.2585) < 1e-9
    assert 3 in diag.out_of_regime
    assert 0 not in diag.out_of_regime
    assert diag.p_max == max(diag.p)

    graph = TopicGraph.from_arcs(4, 1, [])
    plain = Instance(graph, [_ad(0, budget=10.0)])
    assert diagnostics_p(plain).p == (0.1,)


def test_revenue_and_single_regret():
    assert abs(revenue(6.3, 1) - 6.3) < 1e-12
    assert revenue(SpreadEstimate(2.0), 1.5) == 3.0
    assert regret_single(10, 7, 0, 3) == 3
    assert regret_single(10, 12, 0.5, 4) == 4.0


def test_regret_totals_of_hand_allocations():
    instance, alloc_a, alloc_b = toy_instance()
    total_a = regret_total(instance, alloc_a, exact_revenues(instance, alloc_a)).total
    total_b = regret_total(instance, alloc_b, exact_revenues(instance, alloc_b)).total
    assert abs(total_a - 6.6) <= 0.15
    assert abs(total_b - 2.7) <= 0.15

    penalized, alloc_a, alloc_b = toy_instance(lam=0.1)
    total_a = regret_total(penalized, alloc_a, exact_revenues(penalized, alloc_a)).total
    total_b = regret_total(penalized, alloc_b, exact_revenues(penalized, alloc_b)).total
    assert abs(total_a - 7.2) <= 0.15
    assert abs(total_b - 3.3) <= 0.15


def test_regret_report_rows():
    graph = TopicGraph.from_arcs(3, 1, [])
    instance = Instance(graph, [_ad(0, budget=5.0), _ad(1, budget=2.0)], lam=0.5)
    alloc = Allocation.from_seed_sets([[0, 1], []], 3)
    report = regret_total(instance, alloc, [6.0, 0.0])
    first, second = report.ads
    assert first.budget_regret == 1.0
    assert first.seed_regret == 1.0
    assert first.overshoot
    assert second.regret == 2.0
    assert not second.overshoot
    assert report.total == 4.0
    assert report.as_records()[0]['regret'] == 2.0
    try:
        regret_total(instance, alloc, [1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for a short revenue list")


def test_monte_carlo_estimator_reuses_one_pool():
    instance, alloc_a, _ = toy_instance()
    view, ctps = instance.view(0), instance.ctps(0)
    serial = MonteCarloEstimator(runs=1024, seed=6)
    with MonteCarloEstimator(runs=1024, seed=6, workers=2) as shared:
        estimates = [shared.estimate(view, ctps, alloc_a.seed_sets[0], stream=k) for k in range(3)]
        assert shared.pool.starts == 1
    assert estimates == [serial.estimate(view, ctps, alloc_a.seed_sets[0], stream=k)
                         for k in range(3)]
    assert serial.pool.starts == 0

    with WorkerPool(2) as pool:
        borrowed = MonteCarloEstimator(runs=1024, seed=6, pool=pool)
        borrowed.estimate(view, ctps, [2])
        borrowed.close()
        mc_spread(view, ctps, [2], 1024, seed=6, pool=pool)
        assert pool.starts == 1


def random_view(rng, density=0.25, p_high=0.7):
    """3 to 5 users with sparse uncertain arcs; small enough for exact enumeration"""
    n = int(rng.integers(3, 6))
    arcs = [(u, v, [float(rng.uniform(0.05, p_high))])
            for u in range(n) for v in range(n) if u != v and rng.random() < density]
    return collapse(TopicGraph.from_arcs(n, 1, arcs), (1.0,))


def random_seeds(rng, n, most, exclude=()):
    pool = [u for u in range(n) if u not in exclude]
    size = int(rng.integers(0, min(most, len(pool)) + 1))
    return sorted(int(u) for u in rng.choice(pool, size=size, replace=False))


def mc_within_stderr_share(rng, instances, runs, seed=0):
    """Share of random instances whose MC spread lies within 4 stderr of the exact spread"""
    hits = 0
    for k in range(instances):
        view = random_view(rng)
        n = view.node_count
        ctps = rng.uniform(0.2, 1.0, n)
        seeds = random_seeds(rng, n, 3) or [0]
        exact = exact_spread(view, ctps, seeds).mean
        estimate = mc_spread(view, ctps, seeds, runs, seed, stream=k)
        hits += abs(estimate.mean - exact) <= 4 * estimate.stderr + 1e-9
    return hits / instances


def test_click_probability_factors_out_over_random_instances():
    # Seeds already in S click for sure; only the added user's coin is uncertain
    rng = np.random.default_rng(31)
    for _ in range(200):
        view = random_view(rng)
        n = view.node_count
        x = int(rng.integers(n))
        seeds = random_seeds(rng, n, 3, exclude=(x,))
        delta = float(rng.uniform(0.05, 1.0))
        ones = np.ones(n)
        ctps = np.where(np.arange(n) == x, delta, 1.0)
        base = exact_spread(view, ones, seeds).mean
        with_ctp = exact_spread(view, ctps, seeds + [x]).mean - base
        plain = exact_spread(view, ones, seeds + [x]).mean - base
        assert abs(with_ctp - delta * plain) < 1e-9


def test_spread_is_monotone_and_submodular():
    rng = np.random.default_rng(37)
    for _ in range(80):
        view = random_view(rng)
        n = view.node_count
        ctps = rng.uniform(0.2, 1.0, n)
        order = [int(u) for u in rng.permutation(n)]
        x = order[0]
        large = order[1:1 + int(rng.integers(0, n - 1))]
        small = large[:int(rng.integers(0, len(large) + 1))]

        def sigma(seeds):
            return exact_spread(view, ctps, seeds).mean

        assert sigma(small) <= sigma(large) + 1e-9
        assert sigma(small + [x]) - sigma(small) >= sigma(large + [x]) - sigma(large) - 1e-9


def test_mc_spread_unbiased_over_random_instances():
    rng = np.random.default_rng(41)
    assert mc_within_stderr_share(rng, instances=40, runs=4000) >= 0.9
