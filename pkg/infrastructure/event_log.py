"""
Structured event log
Appends one JSON event per line to <output>/events.jsonl
"""

import json
import os
import time
from datetime import datetime

import numpy as np


def _plain(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


class EventLog:
    """Event sink; EventLog(None) accepts and discards everything"""

    def __init__(self, path=None):
        self.path = path
        self.count = 0
        self._failed = False

    @classmethod
    def for_output(cls, output_dir):
        return cls(os.path.join(output_dir, 'events.jsonl'))

    @property
    def enabled(self):
        return self.path is not None

    def emit(self, event, **fields):
        if self.path is None:
            return None
        record = {'event': event, 'timestamp': datetime.now().isoformat(), 'epoch': time.time()}
        record.update(fields)
        try:
            with open(self.path, 'a') as handle:
                handle.write(json.dumps(record, default=_plain) + '\n')
            self.count += 1
        except Exception as e:
            if not self._failed:
                print(f"  ✗ Event logging failed: {e}")
            self._failed = True
        return record


NULL_LOG = EventLog(None)


def read_events(path, limit=None):
    """Events from a log file, oldest first; the last `limit` when given"""
    if not os.path.exists(path):
        return []
    events = []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                continue
    if limit is not None:
        events = events[-limit:] if limit > 0 else []
    return events
