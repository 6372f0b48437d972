"""
Instance assembly from files or generator specs
"""

import dataclasses

from generators.campaigns import (DEFAULT_BUDGETS, DEFAULT_CPES, DEFAULT_CTP_RANGE, DEFAULT_MASS,
                                  gen_campaign)
from generators.synthetic_graphs import (DEFAULT_EXPONENTIAL_MEAN, LITERAL_EXPONENTIAL_MEAN,
                                         gen_topical, gen_weighted_cascade)
from model.campaign import CtpSource, Instance, load_attention, load_campaign
from model.topic_graph import load_graph
from sampling.rng import STREAM_CTP, stream_key, substream


def load_instance(graph_path, campaign_path, attention_path=None, kappa=1, lam=0.0):
    graph = load_graph(graph_path)
    ads = load_campaign(campaign_path, graph.topic_count, graph.node_count)
    if attention_path:
        kappa = load_attention(attention_path, graph.node_count)
    return Instance(graph, ads, kappa, lam)


def host_topic_ctps(ads, n, K, ctp_range, seed):
    """Replace each ad's CTP source with one shared per-user, per-topic host table"""
    rng = substream(stream_key(STREAM_CTP, seed, 1 << 16), 0)
    table = rng.uniform(ctp_range[0], ctp_range[1], (n, K))
    source = CtpSource.host_topics(table.tolist())
    return [dataclasses.replace(ad, ctp=source) for ad in ads]


def generate_instance(spec, seed=0, ctp_mode='uniform', kappa=1, lam=0.0):
    """
    Build an instance from a generator spec:
    {type, n, m, h, K?, mean?, literal_mean?, budgets?, cpes?, ctp_range?, mass?}
    """
    n, m, h = int(spec['n']), int(spec['m']), int(spec['h'])
    K = int(spec.get('K', 1))
    if spec['type'] == 'weighted_cascade':
        graph = gen_weighted_cascade(n, m, K, seed)
    else:
        mean = LITERAL_EXPONENTIAL_MEAN if spec.get('literal_mean') else \
            float(spec.get('mean', DEFAULT_EXPONENTIAL_MEAN))
        graph = gen_topical(n, m, K, mean, seed)

    ctp_range = tuple(spec.get('ctp_range', DEFAULT_CTP_RANGE))
    ads = gen_campaign(h, K, seed,
                       budgets=tuple(spec.get('budgets', DEFAULT_BUDGETS)),
                       cpes=tuple(spec.get('cpes', DEFAULT_CPES)),
                       ctp_range=ctp_range,
                       mass=float(spec.get('mass', DEFAULT_MASS)))
    if ctp_mode == 'host_topics':
        ads = host_topic_ctps(ads, n, K, ctp_range, seed)
    return Instance(graph, ads, kappa, lam)
