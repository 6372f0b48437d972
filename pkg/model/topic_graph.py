"""
Topic-aware social graph
Directed arcs with K per-topic influence probabilities, plus the per-ad collapsed view
"""

import os
from functools import cached_property

import numpy as np

from model.errors import GraphFormatError


class TopicGraph:
    """Immutable directed graph; node ids are dense integers in [0, node_count)"""

    def __init__(self, node_count, topic_count, src, dst, probs):
        self.node_count = int(node_count)
        self.topic_count = int(topic_count)
        if self.node_count < 0:
            raise ValueError("node_count must be non-negative")
        if self.topic_count < 1:
            raise ValueError("topic_count must be at least 1")

        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        probs = np.asarray(probs, dtype=np.float64).reshape(len(src), self.topic_count)

        if len(src) != len(dst):
            raise ValueError("src and dst must have the same length")
        if len(src) and (src.min() < 0 or dst.min() < 0
                         or src.max() >= self.node_count or dst.max() >= self.node_count):
            raise ValueError("arc endpoint outside [0, node_count)")
        if probs.size and (np.any(probs < 0.0) or np.any(probs > 1.0) or np.any(np.isnan(probs))):
            raise ValueError("probability out of range")

        keys = src * max(self.node_count, 1) + dst
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate arc")

        self.src = src
        self.dst = dst
        self.probs = probs

        # Stable sorts keep file order among arcs sharing an endpoint
        self.out_order = np.argsort(src, kind='stable')
        self.in_order = np.argsort(dst, kind='stable')
        self.out_ptr = np.zeros(self.node_count + 1, dtype=np.int64)
        self.in_ptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.node_count), out=self.out_ptr[1:])
        np.cumsum(np.bincount(dst, minlength=self.node_count), out=self.in_ptr[1:])

        for array in (self.src, self.dst, self.probs, self.out_order, self.in_order,
                      self.out_ptr, self.in_ptr):
            array.setflags(write=False)

    @classmethod
    def from_arcs(cls, node_count, topic_count, arcs):
        """Build from an iterable of (src, dst, [p_1..p_K])"""
        arcs = list(arcs)
        src = [a[0] for a in arcs]
        dst = [a[1] for a in arcs]
        probs = [list(a[2]) for a in arcs]
        if any(len(p) != topic_count for p in probs):
            raise ValueError("topic count mismatch")
        return cls(node_count, topic_count, src, dst,
                   np.array(probs, dtype=np.float64).reshape(len(arcs), topic_count))

    @property
    def arc_count(self):
        return len(self.src)

    @property
    def arcs(self):
        return [(int(u), int(v), self.probs[k].tolist())
                for k, (u, v) in enumerate(zip(self.src, self.dst))]

    def out_arcs(self, u):
        return self.out_order[self.out_ptr[u]:self.out_ptr[u + 1]]

    def in_arcs(self, v):
        return self.in_order[self.in_ptr[v]:self.in_ptr[v + 1]]

    def out_neighbors(self, u):
        return self.dst[self.out_arcs(u)]

    def in_neighbors(self, v):
        return self.src[self.in_arcs(v)]

    @cached_property
    def in_degree(self):
        return np.diff(self.in_ptr)

    @cached_property
    def arc_index(self):
        return {(int(u), int(v)): k for k, (u, v) in enumerate(zip(self.src, self.dst))}

    def __repr__(self):
        return f"TopicGraph(nodes={self.node_count}, arcs={self.arc_count}, topics={self.topic_count})"


class AdEdgeView:
    """
    Per-ad read-only view: every arc carries p^i_{u,v} = sum_z gamma[z] * p[z].

    Adjacency is exposed in CSR form (pointer + neighbor + probability arrays) for
    both directions so samplers index flat arrays instead of graph objects.
    """

    def __init__(self, graph, gamma, p):
        self.graph = graph
        self.gamma = gamma
        self.p = p
        self.node_count = graph.node_count

        self.in_ptr = graph.in_ptr
        self.in_src = graph.src[graph.in_order]
        self.in_p = p[graph.in_order]
        self.out_ptr = graph.out_ptr
        self.out_dst = graph.dst[graph.out_order]
        self.out_p = p[graph.out_order]

        for array in (self.p, self.in_src, self.in_p, self.out_dst, self.out_p):
            array.setflags(write=False)

    @property
    def arc_count(self):
        return self.graph.arc_count

    def edge_probability(self, u, v):
        """Collapsed probability of arc (u, v); 0 if the arc does not exist"""
        arc = self.graph.arc_index.get((int(u), int(v)))
        return 0.0 if arc is None else float(self.p[arc])

    def in_slice(self, u):
        lo, hi = self.in_ptr[u], self.in_ptr[u + 1]
        return self.in_src[lo:hi], self.in_p[lo:hi]

    def out_slice(self, u):
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        return self.out_dst[lo:hi], self.out_p[lo:hi]


def collapse(graph, gamma):
    """Collapse per-topic probabilities into one probability per arc for a topic mixture"""
    gamma = np.asarray(gamma, dtype=np.float64).reshape(-1)
    if len(gamma) != graph.topic_count:
        raise ValueError(f"gamma has {len(gamma)} entries, graph has {graph.topic_count} topics")
    if np.any(gamma < 0):
        raise ValueError("gamma entries must be non-negative")
    p = np.clip(graph.probs @ gamma, 0.0, 1.0) if graph.arc_count else np.zeros(0)
    return AdEdgeView(graph, gamma, np.ascontiguousarray(p))


def _parse_header(line, line_number):
    fields = {}
    for token in line.split():
        if '=' not in token:
            raise GraphFormatError(f"malformed header token '{token}'", line_number)
        key, value = token.split('=', 1)
        fields[key] = value
    try:
        return int(fields['nodes']), int(fields['topics'])
    except (KeyError, ValueError):
        raise GraphFormatError("header must be 'nodes=<N> topics=<K>'", line_number)


def load_graph(path):
    """
    Load a graph file: header `nodes=<N> topics=<K>`, then `<src> <dst> <p_1> ... <p_K>`.

    Blank lines and lines starting with '#' are ignored. Arcs keep file order.
    """
    node_count = topic_count = None
    src, dst, probs = [], [], []
    seen = set()

    with open(path) as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if node_count is None:
                node_count, topic_count = _parse_header(line, line_number)
                if node_count < 0 or topic_count < 1:
                    raise GraphFormatError("nodes must be >= 0 and topics >= 1", line_number)
                continue

            tokens = line.split()
            if len(tokens) != 2 + topic_count:
                raise GraphFormatError(
                    f"expected {2 + topic_count} fields (topics={topic_count}), got {len(tokens)}",
                    line_number)
            try:
                u, v = int(tokens[0]), int(tokens[1])
                p = [float(t) for t in tokens[2:]]
            except ValueError:
                raise GraphFormatError("malformed arc line", line_number)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphFormatError(f"node id out of range [0, {node_count})", line_number)
            if any(not (0.0 <= x <= 1.0) for x in p):
                raise GraphFormatError("probability out of range", line_number)
            if (u, v) in seen:
                raise GraphFormatError(f"duplicate arc ({u}, {v})", line_number)
            seen.add((u, v))
            src.append(u)
            dst.append(v)
            probs.append(p)

    if node_count is None:
        raise GraphFormatError("missing header", 1)

    return TopicGraph(node_count, topic_count, src, dst,
                      np.array(probs, dtype=np.float64).reshape(len(src), topic_count))


def write_graph(graph, path):
    with open(path, 'w') as handle:
        handle.write(f"nodes={graph.node_count} topics={graph.topic_count}\n")
        for u, v, row in zip(graph.src, graph.dst, graph.probs):
            values = ' '.join(format(float(x), '.17g') for x in row)
            handle.write(f"{int(u)} {int(v)} {values}\n")


def load_edge_list(path, topic_count=1, probability=None, undirected=False, weighted_cascade=False):
    """
    Load a plain `src dst` edge list with arbitrary string ids.

    Ids are remapped to dense integers in first-seen order and the mapping is written
    next to the input as `<path>.ids` (one original id per line, line k = node k).
    Every topic gets `probability` on each arc, or 1/indegree(v) with weighted_cascade.
    Self-loops and repeated edges are dropped.
    """
    if probability is None and not weighted_cascade:
        raise ValueError("either probability or weighted_cascade is required")

    ids = {}
    pairs = []
    seen = set()

    def dense(token):
        if token not in ids:
            ids[token] = len(ids)
        return ids[token]

    with open(path) as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line[0] in '#%':
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise GraphFormatError("expected at least two fields", line_number)
            u, v = dense(tokens[0]), dense(tokens[1])
            candidates = [(u, v), (v, u)] if undirected else [(u, v)]
            for a, b in candidates:
                if a != b and (a, b) not in seen:
                    seen.add((a, b))
                    pairs.append((a, b))

    n = len(ids)
    src = np.array([a for a, _ in pairs], dtype=np.int64)
    dst = np.array([b for _, b in pairs], dtype=np.int64)
    if weighted_cascade:
        indeg = np.bincount(dst, minlength=n) if len(dst) else np.zeros(n)
        p = 1.0 / indeg[dst] if len(dst) else np.zeros(0)
    else:
        p = np.full(len(src), float(probability))
    probs = np.repeat(p[:, None], topic_count, axis=1)

    with open(os.fspath(path) + '.ids', 'w') as handle:
        for token in sorted(ids, key=ids.get):
            handle.write(f"{token}\n")

    return TopicGraph(n, topic_count, src, dst, probs)
