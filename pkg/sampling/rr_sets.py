"""
Reverse-reachable set sampling
RR and RRC sets, the per-ad collection with its inverted index, and coverage queries
"""

import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from infrastructure.workers import shared_pool
from model.errors import CollectionFormatError
from sampling.rng import STREAM_RR, STREAM_RRC, stream_key, substream

KINDS = ('rr', 'rrc')
MIN_SETS_PER_WORKER = 2048

MAGIC = b'RRCOLL'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<6sI4sQQqq')
_RECORD = struct.Struct('<qI')


@dataclass(frozen=True)
class RrSet:
    root: int
    members: np.ndarray


def _reverse_bfs(in_ptr, in_src, in_p, ctps, root, rng):
    """Reverse BFS from root; ctps=None gives plain RR membership"""
    visited = {root}
    queue = deque([root])
    if ctps is None:
        members = [root]
    else:
        members = [root] if rng.random() < ctps[root] else []

    while queue:
        u = queue.popleft()
        lo, hi = in_ptr[u], in_ptr[u + 1]
        if lo == hi:
            continue
        live = rng.random(hi - lo) < in_p[lo:hi]
        fresh = []
        for v in in_src[lo:hi][live]:
            v = int(v)
            if v not in visited:
                visited.add(v)
                queue.append(v)
                fresh.append(v)
        if not fresh:
            continue
        if ctps is None:
            members.extend(fresh)
        else:
            coins = rng.random(len(fresh)) < ctps[fresh]
            members.extend(v for v, ok in zip(fresh, coins) if ok)
    return members


def sample_rr(view, rng):
    """Plain RR-set: every node that reaches a uniform root in a sampled world"""
    if view.node_count == 0:
        raise ValueError("cannot sample from an empty graph")
    root = int(rng.integers(view.node_count))
    members = _reverse_bfs(view.in_ptr, view.in_src, view.in_p, None, root, rng)
    return RrSet(root, np.array(members, dtype=np.int64))


def sample_rrc(view, ctps, rng):
    """
    RRC-set: like sample_rr, but a node joins only if its own CTP coin succeeds.

    Nodes whose coin fails are still traversed, so their in-neighbours stay reachable.
    Every arc is flipped at most once per sample.
    """
    if view.node_count == 0:
        raise ValueError("cannot sample from an empty graph")
    root = int(rng.integers(view.node_count))
    members = _reverse_bfs(view.in_ptr, view.in_src, view.in_p,
                           np.asarray(ctps, dtype=np.float64), root, rng)
    return RrSet(root, np.array(members, dtype=np.int64))


def _sample_batch(node_count, in_ptr, in_src, in_p, ctps, key, start, stop):
    batch = []
    for k in range(start, stop):
        rng = substream(key, k)
        root = int(rng.integers(node_count))
        members = _reverse_bfs(in_ptr, in_src, in_p, ctps, root, rng)
        batch.append((root, np.array(members, dtype=np.int64)))
    return batch


class RrCollection:
    """
    Sampled sets for one ad.

    Set k is drawn from substream (seed, stream, k) so it never depends on how many
    workers sampled the collection. `theta` counts every set ever sampled; removal only
    flags a set and keeps `residual` (per-node count over non-removed sets) in step.
    The inverted index is compacted lazily as removed ids are encountered.
    """

    def __init__(self, view, kind='rr', ctps=None, seed=0, stream=0):
        if kind not in KINDS:
            raise ValueError(f"unknown collection kind '{kind}'")
        if kind == 'rrc' and ctps is None:
            raise ValueError("rrc collections need ctps")
        if kind == 'rr' and ctps is not None:
            raise ValueError("rr collections do not take ctps")
        self.view = view
        self.kind = kind
        self.ctps = None if ctps is None else np.asarray(ctps, dtype=np.float64)
        self.seed = int(seed)
        self.stream = int(stream)
        self.sets = []
        self.roots = []
        self.removed = bytearray()
        self.removed_count = 0
        self.index = [[] for _ in range(view.node_count)]
        self.residual = np.zeros(view.node_count, dtype=np.int64)
        self._flat = None

    @property
    def theta(self):
        return len(self.sets)

    @property
    def node_count(self):
        return self.view.node_count

    @property
    def key(self):
        tag = STREAM_RR if self.kind == 'rr' else STREAM_RRC
        return stream_key(tag, self.seed, self.stream)

    def get(self, k):
        return RrSet(self.roots[k], self.sets[k])

    def _append(self, root, members):
        k = len(self.sets)
        self.sets.append(members)
        self.roots.append(int(root))
        self.removed.append(0)
        for v in members:
            self.index[v].append(k)
        if len(members):
            self.residual[members] += 1

    def is_removed(self, k):
        return bool(self.removed[k])


def extend(coll, additional, workers=1, pool=None):
    """Append `additional` fresh sets; batches are merged back in set-id order"""
    if additional < 0:
        raise ValueError("additional must be non-negative")
    if additional == 0:
        return coll
    view = coll.view
    start = coll.theta
    args = (view.node_count, view.in_ptr, view.in_src, view.in_p, coll.ctps, coll.key)
    with shared_pool(workers, pool) as active:
        batches = active.map_ranges(_sample_batch, args, start, start + additional,
                                    MIN_SETS_PER_WORKER)

    for batch in batches:
        for root, members in batch:
            coll._append(root, members)
    coll._flat = None
    return coll


def _flat_members(coll):
    if coll._flat is None:
        lengths = np.fromiter((len(s) for s in coll.sets), dtype=np.int64, count=coll.theta)
        flat = np.concatenate(coll.sets) if coll.theta else np.zeros(0, dtype=np.int64)
        owner = np.repeat(np.arange(coll.theta, dtype=np.int64), lengths)
        coll._flat = (flat, owner)
    return coll._flat


def covered_sets(coll, seeds):
    """Ids of all sets (removed or not) that intersect the seed set"""
    seeds = np.array(sorted({int(s) for s in seeds}), dtype=np.int64)
    if len(seeds) == 0:
        return np.zeros(0, dtype=np.int64)
    flat, owner = _flat_members(coll)
    return np.unique(owner[np.isin(flat, seeds)])


def coverage_fraction(coll, seeds):
    """F_R(S) over all θ sampled sets; removal flags are ignored"""
    if coll.theta == 0:
        raise ValueError("coverage of an empty collection is undefined")
    return len(covered_sets(coll, seeds)) / coll.theta


def residual_coverage(coll, v):
    """Number of non-removed sets containing v"""
    return int(coll.residual[v])


def remove_covered(coll, v, since=0):
    """Flag every non-removed set with id >= since that contains v; returns how many"""
    live_ids = []
    count = 0
    for k in coll.index[v]:
        if coll.removed[k]:
            continue
        if k < since:
            live_ids.append(k)
            continue
        coll.removed[k] = 1
        coll.removed_count += 1
        members = coll.sets[k]
        if len(members):
            coll.residual[members] -= 1
        count += 1
    coll.index[v] = live_ids
    return count


def dump_collection(coll, path):
    """Binary dump: header, then (root, length)-prefixed member lists, then removal flags"""
    kind = coll.kind.encode().ljust(4, b'\0')
    with open(path, 'wb') as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, kind, coll.node_count,
                                  coll.theta, coll.seed, coll.stream))
        for root, members in zip(coll.roots, coll.sets):
            handle.write(_RECORD.pack(root, len(members)))
            handle.write(np.asarray(members, dtype='<i8').tobytes())
        handle.write(bytes(coll.removed))


def load_collection(path, view, ctps=None):
    """Rebuild a dumped collection against the same ad view"""
    with open(path, 'rb') as handle:
        data = handle.read()
    if len(data) < _HEADER.size:
        raise CollectionFormatError(f"{path}: truncated header")
    magic, version, kind, node_count, theta, seed, stream = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CollectionFormatError(f"{path}: not an RR collection dump")
    if version != FORMAT_VERSION:
        raise CollectionFormatError(f"{path}: unsupported version {version}")
    kind = kind.rstrip(b'\0').decode()
    if node_count != view.node_count:
        raise CollectionFormatError(
            f"{path}: dump has {node_count} nodes, view has {view.node_count}")

    coll = RrCollection(view, kind, ctps if kind == 'rrc' else None, seed, stream)
    offset = _HEADER.size
    try:
        for _ in range(theta):
            root, length = _RECORD.unpack_from(data, offset)
            offset += _RECORD.size
            if offset + 8 * length > len(data):
                raise CollectionFormatError(f"{path}: truncated member lists")
            members = np.frombuffer(data[offset:offset + 8 * length], dtype='<i8').astype(np.int64)
            offset += 8 * length
            coll._append(root, members)
    except (struct.error, ValueError):
        raise CollectionFormatError(f"{path}: truncated member lists")
    flags = data[offset:offset + theta]
    if len(flags) != theta:
        raise CollectionFormatError(f"{path}: missing removal flags")

    for k, flag in enumerate(flags):
        if flag:
            coll.removed[k] = 1
            coll.removed_count += 1
            if len(coll.sets[k]):
                coll.residual[coll.sets[k]] -= 1
    return coll
