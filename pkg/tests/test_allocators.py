"""
Allocator tests: Myopic, Myopic+, Random, Greedy, TIRM and the regret bound checker
"""

import os
import sys
import tempfile

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from allocators.base import (TERMINATION_BUDGETS_REACHED, TERMINATION_NO_FEASIBLE,
                             TERMINATION_PER_USER)
from allocators.bounds_checker import FAIL, NOT_MET, PASS, check_bounds
from allocators.greedy import greedy, regret_drop
from allocators.myopic import myopic, myopic_plus, random_allocation
from allocators.registry import ALLOCATORS, run_allocator
from allocators.tirm import TirmAdState, select_best_node, tirm, update_estimates
from generators.fixtures import toy_graph, toy_instance
from infrastructure.event_log import EventLog, read_events
from infrastructure.workers import WorkerPool
from model.campaign import AdSpec, CtpSource, Instance, validate_allocation
from model.errors import BruteForceCapError
from model.topic_graph import TopicGraph
from oracle.regret import exact_revenues, regret_total
from oracle.spread import MonteCarloEstimator
from sampling.bounds import SampleParams


def _flat_instance(n, budgets, delta=1.0, kappa=1, lam=0.0):
    """n users with no arcs; every ad has cpe 1 and a constant click probability"""
    graph = TopicGraph.from_arcs(n, 1, [])
    ads = [AdSpec(id=i, gamma=(1.0,), budget=b, cpe=1.0, ctp=CtpSource.constant(delta))
           for i, b in enumerate(budgets)]
    return Instance(graph, ads, kappa=kappa, lam=lam)


def _exact_regret(instance, result):
    return regret_total(instance, result.allocation,
                        exact_revenues(instance, result.allocation)).total


def _random_tiny_instance(rng, n=5):
    arcs = [(u, v, [float(rng.uniform(0.0, 0.6))])
            for u in range(n) for v in range(n) if u != v and rng.random() < 0.3]
    graph = TopicGraph.from_arcs(n, 1, arcs)
    ads = [AdSpec(id=i, gamma=(1.0,), budget=float(rng.uniform(0.5, 3.0)), cpe=1.0,
                  ctp=CtpSource.constant(float(rng.uniform(0.3, 1.0))))
           for i in range(2)]
    return Instance(graph, ads, kappa=int(rng.integers(1, 3)))


def test_regret_drop_shape():
    assert regret_drop(2.0, 1.0, 0.0) == 1.0
    assert regret_drop(2.0, 3.0, 0.0) == 1.0
    assert regret_drop(1.0, 3.0, 0.0) == -1.0
    assert regret_drop(2.0, 1.0, 0.25) == 0.75


def test_myopic_gives_everyone_the_best_ad():
    instance, alloc_a, _ = toy_instance()
    result = myopic(instance)
    assert result.allocation.seed_sets == alloc_a.seed_sets
    assert result.termination == TERMINATION_PER_USER
    assert abs(result.revenues[0] - 5.4) < 1e-9

    wide = instance.with_attention(2)
    result = myopic(wide)
    assert result.allocation.seed_sets[0] == list(range(6))
    assert result.allocation.seed_sets[1] == list(range(6))
    assert validate_allocation(wide, result.allocation) == []


def test_myopic_plus_stops_at_budget():
    graph = toy_graph()
    ad = AdSpec(id=0, gamma=(1.0,), budget=4.0, cpe=1.0, ctp=CtpSource.constant(0.9))
    result = myopic_plus(Instance(graph, [ad]))
    assert result.allocation.seed_sets == [[0, 1, 2, 3, 4]]
    assert abs(result.revenues[0] - 4.5) < 1e-9
    assert result.termination == TERMINATION_BUDGETS_REACHED


def test_myopic_plus_round_robin_runs_out_of_users():
    instance, _, _ = toy_instance()
    result = myopic_plus(instance)
    assert result.allocation.seed_sets == [[0, 4], [1, 5], [2], [3]]
    assert result.termination == TERMINATION_NO_FEASIBLE
    assert validate_allocation(instance, result.allocation) == []


def test_random_allocation_is_seeded():
    instance, _, _ = toy_instance()
    first = random_allocation(instance, seed=3)
    second = random_allocation(instance, seed=3)
    assert first.allocation.seed_sets == second.allocation.seed_sets
    assert validate_allocation(instance, first.allocation) == []
    assert first.allocation.total_seeds() == 6


def test_greedy_beats_hand_allocation():
    instance, _, _ = toy_instance()
    result = greedy(instance)
    assert validate_allocation(instance, result.allocation) == []
    assert _exact_regret(instance, result) <= 2.7
    assert all(step.regret_after < step.regret_before for step in result.log)
    assert abs(result.internal_regret - _exact_regret(instance, result)) < 1e-9


def test_greedy_declines_overshooting_seeds():
    result = greedy(_flat_instance(1, [0.4]))
    assert result.allocation.total_seeds() == 0
    assert result.log == []

    result = greedy(_flat_instance(3, [2.0], lam=5.0))
    assert result.allocation.total_seeds() == 0


def test_greedy_single_user():
    result = greedy(_flat_instance(1, [1.0], delta=0.5))
    assert result.allocation.seed_sets == [[0]]
    assert result.revenues == [0.5]


def test_greedy_monte_carlo_estimator():
    instance, _, _ = toy_instance()
    result = greedy(instance, MonteCarloEstimator(runs=2000, seed=1))
    assert validate_allocation(instance, result.allocation) == []
    assert result.allocation.total_seeds() > 0
    assert _exact_regret(instance, result) < 4.0


def test_tirm_without_propagation_fills_budgets():
    instance = _flat_instance(20, [3.0, 2.0], kappa=2)
    result = tirm(instance, SampleParams(epsilon=0.2), seed=0)
    assert [len(s) for s in result.allocation.seed_sets] == [3, 2]
    assert validate_allocation(instance, result.allocation) == []
    internal = sum(abs(b - r) for b, r in zip(instance.budgets, result.revenues))
    assert internal < 0.5
    assert _exact_regret(instance, result) == 0.0
    assert len(result.collections) == 2
    assert all(t == c.theta for t, c in zip(result.theta, result.collections))


def test_tirm_is_reproducible():
    instance = _flat_instance(20, [3.0, 2.0], kappa=1)
    params = SampleParams(epsilon=0.3)
    first = tirm(instance, params, seed=4)
    second = tirm(instance, params, seed=4)
    assert first.allocation.seed_sets == second.allocation.seed_sets
    assert first.theta == second.theta


def test_tirm_is_independent_of_worker_count():
    instance = _flat_instance(20, [3.0, 2.0], kappa=1)
    params = SampleParams(epsilon=0.3)
    serial = tirm(instance, params, seed=4)
    assert min(serial.theta) > 4096
    with WorkerPool(2) as pool:
        shared = tirm(instance, params, seed=4, pool=pool)
        again = run_allocator('tirm', instance, seed=4, params=params, pool=pool)
        assert pool.starts == 1
    assert shared.allocation.seed_sets == serial.allocation.seed_sets
    assert again.allocation.seed_sets == serial.allocation.seed_sets
    assert shared.theta == serial.theta
    assert shared.revenues == serial.revenues


def test_tirm_on_toy_instance():
    instance, _, _ = toy_instance()
    result = tirm(instance, SampleParams(epsilon=0.3), seed=1)
    assert validate_allocation(instance, result.allocation) == []
    assert _exact_regret(instance, result) < 4.0


def test_tirm_reports_capped_samples_once():
    instance = _flat_instance(20, [3.0, 2.0], kappa=2)
    with tempfile.TemporaryDirectory() as tmp:
        events = EventLog.for_output(tmp)
        result = tirm(instance, SampleParams(epsilon=0.2), seed=0, max_theta=100, events=events)
        capped = [e for e in read_events(events.path) if e['event'] == 'THETA_CAPPED']
    assert result.theta == [100, 100]
    assert sorted(e['ad'] for e in capped) == [0, 1]


def test_select_best_node_respects_attention():
    instance = _flat_instance(10, [2.0], kappa=1)
    state = TirmAdState(instance, 0, SampleParams(epsilon=0.5), seed=2, pilot_size=50)
    usage = np.zeros(10, dtype=np.int64)
    v, cov = select_best_node(state, usage, instance.kappa)
    assert cov == int(state.coll.residual.max())
    assert state.coll.residual[v] == cov
    assert state.coll.residual[:v].max(initial=-1) < cov

    usage[v] = 1
    other, _ = select_best_node(state, usage, instance.kappa)
    assert other != v
    assert select_best_node(state, np.ones(10, dtype=np.int64), instance.kappa) is None


def test_update_estimates_credits_new_samples():
    instance = _flat_instance(10, [2.0], kappa=1)
    state = TirmAdState(instance, 0, SampleParams(epsilon=0.5), seed=3, pilot_size=50)
    v, cov = select_best_node(state, np.zeros(10, dtype=np.int64), instance.kappa)
    state.add_seed(v, cov)
    previous = state.grow_to(state.theta * 2)
    update_estimates(state, previous)
    containing = sum(1 for members in state.coll.sets if v in members.tolist())
    assert state.log[0][1] == containing
    assert abs(state.pi_hat - state.gain(v, containing)) < 1e-12
    assert state.coll.residual[v] == 0


def test_registry_dispatch():
    instance, _, _ = toy_instance()
    for name in ('myopic', 'myopic_plus', 'random', 'greedy_exact'):
        result = run_allocator(name, instance, seed=1)
        assert result.wall_ms >= 0.0
        assert validate_allocation(instance, result.allocation) == []
    assert 'tirm' in ALLOCATORS
    try:
        run_allocator('irie', instance)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for an unknown allocator")


def test_check_bounds_on_toy_instance():
    instance, _, _ = toy_instance()
    report = check_bounds(instance, greedy(instance))
    assert report.p_max > 1.0
    assert report.optimal_regret <= report.allocator_regret + 1e-9
    assert report.status('one_third') == PASS
    assert report.status('p_max') == NOT_MET
    assert report.status('general') == NOT_MET


def test_check_bounds_general_regime():
    instance = _flat_instance(4, [1.2, 0.8], delta=0.5, kappa=2)
    report = check_bounds(instance, greedy(instance))
    assert report.s_opt == (3, 2)
    assert abs(report.optimal_regret - 0.4) < 1e-9
    assert abs(report.allocator_regret - 0.4) < 1e-9
    assert report.status('one_third') == PASS
    assert report.status('p_max') == PASS
    assert report.status('general') == PASS


def test_check_bounds_refuses_large_instances():
    instance = _flat_instance(15, [1.0])
    try:
        check_bounds(instance, greedy(instance))
    except BruteForceCapError:
        pass
    else:
        raise AssertionError("expected BruteForceCapError")


def test_greedy_within_a_third_of_budget():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(20):
        instance = _random_tiny_instance(rng)
        report = check_bounds(instance, greedy(instance))
        assert report.status('one_third') != FAIL
        if report.status('one_third') == PASS:
            checked += 1
    assert checked > 0


def test_select_best_node_prefers_the_upstream_user():
    graph = TopicGraph.from_arcs(2, 1, [(0, 1, [1.0])])
    ad = AdSpec(id=0, gamma=(1.0,), budget=1.0, cpe=1.0, ctp=CtpSource.constant(1.0))
    instance = Instance(graph, [ad])
    state = TirmAdState(instance, 0, SampleParams(epsilon=0.5), seed=0, pilot_size=20)
    v, cov = select_best_node(state, np.zeros(2, dtype=np.int64), instance.kappa)
    assert v == 0
    assert cov == state.theta

    state.add_seed(v, cov)
    assert select_best_node(state, np.zeros(2, dtype=np.int64), instance.kappa) is None


def bounded_tiny_instance(rng, lam=0.0):
    """Two ads on 3 to 6 users with small click probabilities; every user can take both"""
    n = int(rng.integers(3, 7))
    arcs = [(u, v, [float(rng.uniform(0.0, 0.3))])
            for u in range(n) for v in range(n) if u != v and rng.random() < 0.25]
    ads = [AdSpec(id=i, gamma=(1.0,), budget=float(rng.uniform(0.8, 1.6)), cpe=1.0,
                  ctp=CtpSource.constant(float(rng.uniform(0.05, 0.3))))
           for i in range(2)]
    return Instance(TopicGraph.from_arcs(n, 1, arcs), ads, kappa=2, lam=lam)


def tight_bound_passes(rng, instances, lam_general=0.05):
    """Greedy against the p_max bound (λ = 0) and the general bound (λ > 0); None may fail"""
    passes = {'p_max': 0, 'general': 0}
    for name, lam in (('p_max', 0.0), ('general', lam_general)):
        for _ in range(instances):
            instance = bounded_tiny_instance(rng, lam)
            status = check_bounds(instance, greedy(instance)).status(name)
            assert status != FAIL, f"{name} bound violated"
            passes[name] += status == PASS
    return passes


def test_greedy_within_tight_and_general_bounds():
    passes = tight_bound_passes(np.random.default_rng(17), 30)
    assert passes['general'] > 0
