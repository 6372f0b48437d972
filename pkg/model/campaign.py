"""
Advertisers, instances and allocations
Budgets, CPEs, click-through probabilities and per-user attention bounds
"""

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from model.errors import (AllocationFormatError, AttentionFormatError,
                          CampaignFormatError)
from model.topic_graph import collapse
from sampling.rng import STREAM_CTP, stream_key, substream

CTP_MODES = ('constant', 'table', 'uniform')


@dataclass(frozen=True)
class CtpSource:
    """
    Where δ(u, i) comes from.

    constant: one value for every user.
    table: either direct per-node values, or per-node per-topic host probabilities
           p_{H,u}^z that get averaged with the ad's topic mixture.
    uniform: a value in [lo, hi] derived from (seed, ad id, u).
    """
    mode: str
    value: float = 0.0
    values: tuple = ()
    host_topic_probs: tuple = ()
    lo: float = 0.0
    hi: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in CTP_MODES:
            raise ValueError(f"unknown ctp mode '{self.mode}'")
        if self.mode == 'constant' and not 0.0 <= self.value <= 1.0:
            raise ValueError("constant ctp must be in [0, 1]")
        if self.mode == 'uniform' and not 0.0 <= self.lo <= self.hi <= 1.0:
            raise ValueError("uniform ctp range must satisfy 0 <= lo <= hi <= 1")
        if self.mode == 'table':
            if bool(self.values) == bool(self.host_topic_probs):
                raise ValueError("table ctp needs exactly one of values / host_topic_probs")
            table = np.asarray(self.values or self.host_topic_probs, dtype=np.float64)
            if np.any(table < 0.0) or np.any(table > 1.0):
                raise ValueError("ctp table values must be in [0, 1]")

    @classmethod
    def constant(cls, value):
        return cls(mode='constant', value=float(value))

    @classmethod
    def table(cls, values):
        return cls(mode='table', values=tuple(float(x) for x in values))

    @classmethod
    def host_topics(cls, rows):
        return cls(mode='table', host_topic_probs=tuple(tuple(float(x) for x in r) for r in rows))

    @classmethod
    def uniform(cls, lo, hi, seed):
        return cls(mode='uniform', lo=float(lo), hi=float(hi), seed=int(seed))

    def materialize(self, node_count, ad_id, gamma):
        """Per-node CTP vector for one ad"""
        if self.mode == 'constant':
            return np.full(node_count, self.value)
        if self.mode == 'uniform':
            rng = substream(stream_key(STREAM_CTP, self.seed, ad_id), 0)
            return self.lo + (self.hi - self.lo) * rng.random(node_count)
        if self.values:
            table = np.asarray(self.values, dtype=np.float64)
            if len(table) != node_count:
                raise ValueError(f"ctp table has {len(table)} entries, graph has {node_count} nodes")
            return table.copy()
        rows = np.asarray(self.host_topic_probs, dtype=np.float64)
        if rows.shape != (node_count, len(gamma)):
            raise ValueError(f"host topic table must be {node_count}x{len(gamma)}")
        return np.clip(rows @ np.asarray(gamma), 0.0, 1.0)

    def to_record(self):
        if self.mode == 'constant':
            return {'mode': 'constant', 'value': self.value}
        if self.mode == 'uniform':
            return {'mode': 'uniform', 'lo': self.lo, 'hi': self.hi, 'seed': self.seed}
        if self.values:
            return {'mode': 'table', 'values': list(self.values)}
        return {'mode': 'table', 'host_topic_probs': [list(r) for r in self.host_topic_probs]}


@dataclass(frozen=True)
class AdSpec:
    id: int
    gamma: tuple
    budget: float
    cpe: float
    ctp: CtpSource
    boost_beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'gamma', tuple(float(g) for g in self.gamma))
        if any(g < 0 for g in self.gamma):
            raise ValueError(f"ad {self.id}: gamma entries must be non-negative")
        if abs(sum(self.gamma) - 1.0) > 1e-9:
            raise ValueError(f"ad {self.id}: gamma must sum to 1 (got {sum(self.gamma)!r})")
        if not self.budget > 0:
            raise ValueError(f"ad {self.id}: budget must be positive")
        if not self.cpe > 0:
            raise ValueError(f"ad {self.id}: cpe must be positive")
        if self.boost_beta < 0:
            raise ValueError(f"ad {self.id}: boost_beta must be non-negative")

    @property
    def effective_budget(self):
        return (1.0 + self.boost_beta) * self.budget

    def to_record(self):
        record = {'id': self.id, 'gamma': list(self.gamma), 'budget': self.budget,
                  'cpe': self.cpe, 'ctp': self.ctp.to_record()}
        if self.boost_beta:
            record['boost_beta'] = self.boost_beta
        return record


class Instance:
    """
    Graph + ads + attention bounds + seed penalty.

    Budgets are boosted once here; everything downstream reads `budgets` (B').
    Collapsed views and CTP vectors are built on first use and never change.
    """

    def __init__(self, graph, ads, kappa=1, lam=0.0):
        self.graph = graph
        self.ads = tuple(ads)
        self.lam = float(lam)
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

        ids = [ad.id for ad in self.ads]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate ad id")
        for ad in self.ads:
            if len(ad.gamma) != graph.topic_count:
                raise ValueError(f"ad {ad.id}: gamma has {len(ad.gamma)} entries, "
                                 f"graph has {graph.topic_count} topics")

        if np.isscalar(kappa):
            kappa = np.full(graph.node_count, kappa)
        kappa = np.asarray(kappa)
        if kappa.shape != (graph.node_count,):
            raise ValueError("kappa must be a scalar or one entry per node")
        if kappa.size and (np.any(kappa < 0) or np.any(kappa != np.floor(kappa))):
            raise ValueError("kappa entries must be non-negative integers")
        self.kappa = kappa.astype(np.int64)
        self.kappa.setflags(write=False)

        self.budgets = np.array([ad.effective_budget for ad in self.ads], dtype=np.float64)
        self.cpes = np.array([ad.cpe for ad in self.ads], dtype=np.float64)
        self.budgets.setflags(write=False)
        self.cpes.setflags(write=False)
        self._views = {}
        self._ctps = {}

    @property
    def n(self):
        return self.graph.node_count

    @property
    def h(self):
        return len(self.ads)

    @cached_property
    def ad_index(self):
        return {ad.id: i for i, ad in enumerate(self.ads)}

    def view(self, i):
        if i not in self._views:
            self._views[i] = collapse(self.graph, self.ads[i].gamma)
        return self._views[i]

    def ctps(self, i):
        if i not in self._ctps:
            ad = self.ads[i]
            table = ad.ctp.materialize(self.n, ad.id, ad.gamma)
            table.setflags(write=False)
            self._ctps[i] = table
        return self._ctps[i]

    def with_attention(self, kappa):
        clone = Instance(self.graph, self.ads, kappa, self.lam)
        clone._views, clone._ctps = self._views, self._ctps
        return clone

    def with_penalty(self, lam):
        clone = Instance(self.graph, self.ads, self.kappa, lam)
        clone._views, clone._ctps = self._views, self._ctps
        return clone

    def __repr__(self):
        return f"Instance(n={self.n}, h={self.h}, lambda={self.lam})"


def ctp(instance, u, i):
    """δ(u, i)"""
    if not 0 <= u < instance.n:
        raise IndexError(f"node {u} out of range")
    if not 0 <= i < instance.h:
        raise IndexError(f"ad index {i} out of range")
    return float(instance.ctps(i)[u])


class Allocation:
    """Seed sets S_1..S_h (selection order kept) with per-node usage counts"""

    def __init__(self, h, n):
        self.seed_sets = [[] for _ in range(h)]
        self._members = [set() for _ in range(h)]
        self.usage = np.zeros(n, dtype=np.int64)

    @classmethod
    def from_seed_sets(cls, seed_sets, n):
        alloc = cls(len(seed_sets), n)
        for i, seeds in enumerate(seed_sets):
            for u in seeds:
                alloc.add(i, u)
        return alloc

    @property
    def h(self):
        return len(self.seed_sets)

    def add(self, i, u):
        u = int(u)
        if not 0 <= u < len(self.usage):
            raise IndexError(f"node {u} out of range")
        if u in self._members[i]:
            raise ValueError(f"node {u} already seeds ad index {i}")
        self.seed_sets[i].append(u)
        self._members[i].add(u)
        self.usage[u] += 1

    def contains(self, i, u):
        return int(u) in self._members[i]

    def seeds(self, i):
        return list(self.seed_sets[i])

    def seed_count(self, i):
        return len(self.seed_sets[i])

    def total_seeds(self):
        return sum(len(s) for s in self.seed_sets)

    def distinct_nodes(self):
        return set().union(*self._members) if self._members else set()

    def copy(self):
        return Allocation.from_seed_sets(self.seed_sets, len(self.usage))


def validate_allocation(instance, alloc):
    """List of (u, count, kappa_u) for every user over its attention bound"""
    if alloc.h != instance.h or len(alloc.usage) != instance.n:
        raise ValueError("allocation shape does not match instance")
    over = np.nonzero(alloc.usage > instance.kappa)[0]
    return [(int(u), int(alloc.usage[u]), int(instance.kappa[u])) for u in over]


def _parse_ctp(record, where):
    mode = record.get('mode')
    if mode == 'constant':
        return CtpSource.constant(record['value'])
    if mode == 'uniform':
        return CtpSource.uniform(record['lo'], record['hi'], record.get('seed', 0))
    if mode == 'table':
        if 'values' in record:
            return CtpSource.table(record['values'])
        if 'host_topic_probs' in record:
            return CtpSource.host_topics(record['host_topic_probs'])
        raise CampaignFormatError(f"{where}: table ctp needs 'values' or 'host_topic_probs'")
    raise CampaignFormatError(f"{where}: unknown ctp mode {mode!r}")


def load_campaign(path, topic_count=None, node_count=None):
    """Parse a JSON array of ad records"""
    try:
        with open(path) as handle:
            records = json.load(handle)
    except json.JSONDecodeError as e:
        raise CampaignFormatError(f"{path}: invalid JSON ({e})")
    if not isinstance(records, list):
        raise CampaignFormatError(f"{path}: expected a JSON array of ad records")

    ads = []
    for k, record in enumerate(records):
        where = f"ad record {k}"
        try:
            ctp_source = _parse_ctp(record.get('ctp', {}), where)
            ad = AdSpec(id=int(record['id']), gamma=tuple(record['gamma']),
                        budget=float(record['budget']), cpe=float(record['cpe']),
                        ctp=ctp_source, boost_beta=float(record.get('boost_beta', 0.0)))
        except CampaignFormatError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise CampaignFormatError(f"{where}: {e}")
        if topic_count is not None and len(ad.gamma) != topic_count:
            raise CampaignFormatError(f"{where}: gamma has {len(ad.gamma)} entries, expected {topic_count}")
        if node_count is not None:
            try:
                ad.ctp.materialize(node_count, ad.id, ad.gamma)
            except ValueError as e:
                raise CampaignFormatError(f"{where}: {e}")
        ads.append(ad)
    return ads


def write_campaign(ads, path):
    with open(path, 'w') as handle:
        json.dump([ad.to_record() for ad in ads], handle, indent=2)
        handle.write('\n')


def load_attention(path, node_count):
    """
    Attention bounds: a single integer (applies to everyone), or `<node> <kappa>` lines
    with an optional `default=<k>` line for unlisted nodes (default 1).
    """
    with open(path) as handle:
        lines = [(k, raw.strip()) for k, raw in enumerate(handle, start=1)]
    lines = [(k, line) for k, line in lines if line and not line.startswith('#')]

    if len(lines) == 1 and len(lines[0][1].split()) == 1 and '=' not in lines[0][1]:
        try:
            scalar = int(lines[0][1])
        except ValueError:
            raise AttentionFormatError(f"line {lines[0][0]}: expected an integer")
        if scalar < 0:
            raise AttentionFormatError("attention bound must be non-negative")
        return np.full(node_count, scalar, dtype=np.int64)

    default = 1
    overrides = {}
    for k, line in lines:
        if line.startswith('default='):
            try:
                default = int(line.split('=', 1)[1])
            except ValueError:
                raise AttentionFormatError(f"line {k}: malformed default")
            continue
        tokens = line.split()
        try:
            u, value = int(tokens[0]), int(tokens[1])
        except (IndexError, ValueError):
            raise AttentionFormatError(f"line {k}: expected '<node> <kappa>'")
        if not 0 <= u < node_count:
            raise AttentionFormatError(f"line {k}: node {u} out of range")
        if value < 0:
            raise AttentionFormatError(f"line {k}: attention bound must be non-negative")
        overrides[u] = value

    if default < 0:
        raise AttentionFormatError("default attention bound must be non-negative")
    kappa = np.full(node_count, default, dtype=np.int64)
    for u, value in overrides.items():
        kappa[u] = value
    return kappa


def write_attention(kappa, path):
    kappa = np.asarray(kappa)
    with open(path, 'w') as handle:
        if kappa.size and np.all(kappa == kappa[0]):
            handle.write(f"{int(kappa[0])}\n")
            return
        for u, value in enumerate(kappa):
            handle.write(f"{u} {int(value)}\n")


def write_allocation(instance, alloc, path):
    """One line per ad: `ad_id: node node ...` in selection order"""
    with open(path, 'w') as handle:
        for ad, seeds in zip(instance.ads, alloc.seed_sets):
            nodes = ' '.join(str(u) for u in seeds)
            handle.write(f"{ad.id}: {nodes}".rstrip() + '\n')


def read_seed_sets(path):
    """
    Parse an allocation file into (line number, ad id, nodes) records.

    Only the line format is checked; ids are not resolved against an instance.
    """
    records = []
    with open(path) as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if ':' not in line:
                raise AllocationFormatError(f"line {line_number}: expected 'ad_id: nodes'")
            head, tail = line.split(':', 1)
            try:
                records.append((line_number, int(head), [int(token) for token in tail.split()]))
            except ValueError as e:
                raise AllocationFormatError(f"line {line_number}: {e}")
    return records


def read_allocation(instance, path):
    alloc = Allocation(instance.h, instance.n)
    for line_number, ad_id, nodes in read_seed_sets(path):
        if ad_id not in instance.ad_index:
            raise AllocationFormatError(f"line {line_number}: unknown ad id {ad_id}")
        i = instance.ad_index[ad_id]
        try:
            for u in nodes:
                alloc.add(i, u)
        except (IndexError, ValueError) as e:
            raise AllocationFormatError(f"line {line_number}: {e}")
    return alloc
