"""
The six-user, four-ad toy instance and its two hand allocations
"""

from model.campaign import AdSpec, Allocation, CtpSource, Instance
from model.topic_graph import TopicGraph

# v1..v6 are node ids 0..5
TOY_ARCS = [
    (0, 2, [0.2]),
    (1, 2, [0.2]),
    (2, 3, [0.5]),
    (2, 4, [0.5]),
    (3, 5, [0.1]),
    (4, 5, [0.1]),
]
TOY_CTPS = (0.9, 0.8, 0.7, 0.6)
TOY_BUDGETS = (4.0, 2.0, 2.0, 1.0)


def toy_graph():
    return TopicGraph.from_arcs(6, 1, TOY_ARCS)


def toy_instance(lam=0.0):
    """Returns (instance, allocation A, allocation B)"""
    ads = [AdSpec(id=i, gamma=(1.0,), budget=TOY_BUDGETS[i], cpe=1.0,
                  ctp=CtpSource.constant(TOY_CTPS[i]))
           for i in range(4)]
    instance = Instance(toy_graph(), ads, kappa=1, lam=lam)

    # A: everyone gets the ad with the best click-through probability
    allocation_a = Allocation.from_seed_sets([[0, 1, 2, 3, 4, 5], [], [], []], 6)
    allocation_b = Allocation.from_seed_sets([[0, 1], [2], [3, 4], [5]], 6)
    return instance, allocation_a, allocation_b
