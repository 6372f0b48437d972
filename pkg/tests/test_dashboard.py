"""
Dashboard endpoint tests
"""

import json
import os
import sys
import tempfile

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dashboard.app import create_app
from harness.evaluation import evaluate, rows_frame
from infrastructure.event_log import EventLog
from generators.fixtures import toy_instance
from model.campaign import write_allocation


def _populate(tmp):
    instance, alloc_a, alloc_b = toy_instance()
    os.makedirs(os.path.join(tmp, 'allocations'))
    write_allocation(instance, alloc_a, os.path.join(tmp, 'allocations', 'myopic_k1_l0.txt'))
    write_allocation(instance, alloc_b, os.path.join(tmp, 'allocations', 'hand_k1_l0.txt'))
    frames = [rows_frame(evaluate(instance, alloc, runs=50, seed=0, allocator=name))
              for name, alloc in (('myopic', alloc_a), ('hand', alloc_b))]
    frames[0].to_csv(os.path.join(tmp, 'report.csv'), index=False)
    frames[1].to_csv(os.path.join(tmp, 'report.csv'), mode='a', header=False, index=False)
    with open(os.path.join(tmp, 'summary.json'), 'w') as handle:
        json.dump({'cells': [{'cell': 'myopic_k1_l0', 'total_regret': 6.5}]}, handle)
    events = EventLog.for_output(tmp)
    for k in range(5):
        events.emit('CELL_START', index=k)


def test_dashboard_serves_sweep_output():
    with tempfile.TemporaryDirectory() as tmp:
        _populate(tmp)
        client = create_app(tmp).test_client()

        assert '/api/summary' in client.get('/').get_json()['endpoints']
        assert client.get('/api/summary').get_json()['cells'][0]['total_regret'] == 6.5

        rows = client.get('/api/report').get_json()
        assert len(rows) == 8
        hand = client.get('/api/report?allocator=hand').get_json()
        assert len(hand) == 4 and all(r['allocator'] == 'hand' for r in hand)

        assert client.get('/api/allocations').get_json() == ['hand_k1_l0', 'myopic_k1_l0']
        cell = client.get('/api/allocations/hand_k1_l0').get_json()
        assert cell['seed_sets']['2'] == [3, 4]
        assert cell['distinct_nodes'] == 6
        assert client.get('/api/allocations/nope').status_code == 404

        with open(os.path.join(tmp, 'allocations', 'broken_k1_l0.txt'), 'w') as handle:
            handle.write("0: 1\nnot an allocation\n")
        broken = client.get('/api/allocations/broken_k1_l0')
        assert broken.status_code == 400
        assert 'line 2' in broken.get_json()['error']

        assert len(client.get('/api/events?limit=2').get_json()) == 2
        assert client.get('/api/events?limit=two').status_code == 400


def test_dashboard_without_output():
    with tempfile.TemporaryDirectory() as tmp:
        client = create_app(tmp).test_client()
        assert client.get('/api/summary').status_code == 404
        assert client.get('/api/report').status_code == 404
        assert client.get('/api/allocations').get_json() == []
        assert client.get('/api/events').get_json() == []
