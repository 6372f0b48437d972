"""
Configuration, event log and output-directory tests
"""

import contextlib
import io
import json
import os
import sys
import tempfile

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from infrastructure.config import ExperimentConfig, load_config, resolve_workers
from infrastructure.event_log import NULL_LOG, EventLog, read_events
from infrastructure.setup import provision_output_dir
from infrastructure.workers import WorkerPool, shared_pool
from model.errors import ConfigError

GENERATOR = {'type': 'weighted_cascade', 'n': 10, 'm': 20, 'h': 1}


def _expect_config_error(**kwargs):
    try:
        ExperimentConfig(**kwargs)
    except ConfigError as e:
        return str(e)
    raise AssertionError(f"expected ConfigError for {kwargs}")


@contextlib.contextmanager
def _env(name, value):
    previous = os.environ.get(name)
    if value is None:
        os.environ.pop(name, None)
    else:
        os.environ[name] = value
    try:
        yield
    finally:
        if previous is None:
            os.environ.pop(name, None)
        else:
            os.environ[name] = previous


def test_config_defaults():
    with _env('ADALLOC_WORKERS', None):
        config = ExperimentConfig(generator=GENERATOR, workers=2)
    assert config.allocators == ['myopic', 'myopic_plus', 'tirm']
    assert config.epsilon == 0.1
    assert config.ell == 1.0
    assert config.eval_runs == 10000
    assert config.workers == 2
    assert config.output_dir
    assert config.to_dict()['generator'] == GENERATOR


def test_config_rejects_inconsistent_documents():
    assert 'either' in _expect_config_error()
    assert 'both' in _expect_config_error(generator=GENERATOR, graph='g.txt', campaign='c.json')
    assert 'campaign' in _expect_config_error(graph='g.txt')
    _expect_config_error(generator={'type': 'lattice', 'n': 1, 'm': 0, 'h': 1})
    _expect_config_error(generator={'type': 'topical', 'n': 10})
    _expect_config_error(generator=GENERATOR, allocators=['irie'])
    _expect_config_error(generator=GENERATOR, epsilon=1.5)
    _expect_config_error(generator=GENERATOR, lambdas=[-0.1])
    _expect_config_error(generator=GENERATOR, ctp_mode='learned')

    try:
        ExperimentConfig.from_dict({'generator': GENERATOR, 'colour': 'blue'})
    except ConfigError as e:
        assert 'colour' in str(e)
    else:
        raise AssertionError("expected ConfigError for an unknown key")


def test_load_config_resolves_relative_paths():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'sweep.json')
        with open(path, 'w') as handle:
            json.dump({'graph': 'graph.txt', 'campaign': 'campaign.json', 'lambdas': [0, 0.5],
                       'workers': 1}, handle)
        config = load_config(path)
        assert config.graph == os.path.join(tmp, 'graph.txt')
        assert config.lambdas == [0, 0.5]

        broken = os.path.join(tmp, 'broken.json')
        with open(broken, 'w') as handle:
            handle.write('{')
        for target in (broken, os.path.join(tmp, 'missing.json')):
            try:
                load_config(target)
            except ConfigError:
                continue
            raise AssertionError("expected ConfigError")


def test_resolve_workers_environment_override():
    with _env('ADALLOC_WORKERS', '3'):
        assert resolve_workers(8) == 3
    with _env('ADALLOC_WORKERS', None):
        assert resolve_workers(5) == 5
        assert resolve_workers() >= 1
    with _env('ADALLOC_WORKERS', 'many'):
        try:
            resolve_workers()
        except ConfigError:
            pass
        else:
            raise AssertionError("expected ConfigError")


def test_event_log_writes_json_lines():
    assert NULL_LOG.emit('IGNORED', x=1) is None
    assert not NULL_LOG.enabled

    with tempfile.TemporaryDirectory() as tmp:
        log = EventLog.for_output(tmp)
        log.emit('CELL_START', cell='tirm_k1_l0', seed=np.int64(4))
        log.emit('CELL_COMPLETE', cell='tirm_k1_l0', regret=np.float64(1.5), theta=np.arange(2))
        events = read_events(log.path)
        assert read_events(log.path, limit=1)[0]['event'] == 'CELL_COMPLETE'
        assert read_events(os.path.join(tmp, 'missing.jsonl')) == []

    assert log.count == 2
    assert [e['event'] for e in events] == ['CELL_START', 'CELL_COMPLETE']
    assert events[0]['seed'] == 4
    assert events[1]['theta'] == [0, 1]
    assert 'timestamp' in events[0] and 'epoch' in events[0]


def test_event_log_survives_unwritable_path():
    log = EventLog('/nonexistent/dir/events.jsonl')
    with contextlib.redirect_stdout(io.StringIO()) as out:
        log.emit('A')
        log.emit('B')
    assert log.count == 0
    assert out.getvalue().count('Event logging failed') == 1


def test_provision_output_dir():
    with tempfile.TemporaryDirectory() as tmp:
        target = os.path.join(tmp, 'results')
        with contextlib.redirect_stdout(io.StringIO()):
            path = provision_output_dir(target)
        assert path == os.path.abspath(target)
        assert os.path.isdir(os.path.join(target, 'allocations'))
        assert not os.path.exists(os.path.join(target, '.write-check'))


def test_worker_pool_starts_once_and_keeps_slice_order():
    with WorkerPool(1) as serial:
        assert serial.map_ranges(range, (), 0, 10, 4) == [range(0, 10)]
    assert serial.starts == 0

    with WorkerPool(2) as pool:
        assert pool.map_ranges(range, (), 0, 6, 4) == [range(0, 6)]
        assert pool.starts == 0
        first = pool.map_ranges(range, (), 0, 8, 4)
        second = pool.map_ranges(range, (), 8, 20, 4)
        assert pool.starts == 1
        with shared_pool(workers=8, pool=pool) as borrowed:
            assert borrowed is pool
        assert pool._executor is not None
    assert pool._executor is None
    assert first == [range(0, 4), range(4, 8)]
    assert second == [range(8, 14), range(14, 20)]

    with shared_pool(workers=3) as owned:
        assert owned.workers == 3 and owned.starts == 0
