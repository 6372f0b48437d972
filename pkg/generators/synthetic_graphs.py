"""
Synthetic topic graphs
Random directed topologies with weighted-cascade or exponential per-topic probabilities
"""

import networkx as nx
import numpy as np

from model.topic_graph import TopicGraph
from sampling.rng import STREAM_GEN, stream_key, substream

DEFAULT_EXPONENTIAL_MEAN = 1.0 / 30.0
LITERAL_EXPONENTIAL_MEAN = 30.0


def _topology(n, m, seed):
    """Directed arcs of a G(n, m) random graph in sorted order; no self-loops or repeats"""
    if n < 0 or m < 0:
        raise ValueError("n and m must be non-negative")
    if m > n * (n - 1):
        raise ValueError(f"{m} arcs do not fit in a simple directed graph on {n} nodes")
    graph_seed = int(substream(stream_key(STREAM_GEN, seed, 0), 0).integers(2 ** 31))
    graph = nx.gnm_random_graph(n, m, seed=graph_seed, directed=True)
    arcs = np.array(sorted(graph.edges()), dtype=np.int64).reshape(-1, 2)
    return arcs[:, 0], arcs[:, 1]


def weighted_cascade_probabilities(dst, n):
    """1 / indegree(v) for every arc (u, v)"""
    if len(dst) == 0:
        return np.zeros(0)
    indegree = np.bincount(dst, minlength=n)
    return 1.0 / indegree[dst]


def gen_weighted_cascade(n, m, K=1, seed=0):
    """Random topology; every topic carries 1/indegree(v) on arc (u, v)"""
    src, dst = _topology(n, m, seed)
    p = weighted_cascade_probabilities(dst, n)
    return TopicGraph(n, K, src, dst, np.repeat(p[:, None], K, axis=1))


def exponential_probabilities(rng, mean, size, clip=True):
    """Inverse-transform exponential draws with the given mean, clipped to [0, 1]"""
    if mean < 0:
        raise ValueError("mean must be non-negative")
    draws = -mean * np.log1p(-rng.random(size))
    return np.clip(draws, 0.0, 1.0) if clip else draws


def gen_topical(n, m, K, mean=DEFAULT_EXPONENTIAL_MEAN, seed=0):
    """Random topology with independent exponential per-arc, per-topic probabilities"""
    src, dst = _topology(n, m, seed)
    rng = substream(stream_key(STREAM_GEN, seed, 1), 0)
    probs = exponential_probabilities(rng, mean, (len(src), K))
    return TopicGraph(n, K, src, dst, probs)
