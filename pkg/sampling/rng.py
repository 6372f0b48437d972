"""
Counter-based random substreams.

Every randomized quantity (an RR-set, an MC run, a uniform CTP table) draws from its own
Philox stream. The key comes from hashing a path of integers with SeedSequence, and the
stream index goes into the Philox counter, so item k can be regenerated without touching
items 0..k-1 and results never depend on which worker produced them.
"""

import numpy as np

# Stream tags keep different consumers of one master seed apart
STREAM_RR = 1
STREAM_RRC = 2
STREAM_MC = 3
STREAM_PILOT = 4
STREAM_CTP = 5
STREAM_GEN = 6
STREAM_ALLOC = 7
STREAM_CELL = 8


def stream_key(*path):
    """128-bit Philox key derived from a path of non-negative integers"""
    words = [int(x) & 0xFFFFFFFFFFFFFFFF for x in path]
    return np.random.SeedSequence(words).generate_state(2, dtype=np.uint64)


def substream(key, index):
    """Generator for item `index` of the stream identified by `key`"""
    counter = np.zeros(4, dtype=np.uint64)
    counter[2] = np.uint64(int(index) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))
