"""Keyed random streams.

Every random draw in the package comes from a generator derived from an
experiment seed plus a tuple of integer keys (stream id, round, node, ...).
Draw order therefore never leaks between consumers.
"""
from __future__ import annotations

import numpy as np

# stream ids
DATA = 1
PARTITION = 2
SCHEDULE = 3
BATCH = 4
INIT = 5
TOPOLOGY = 6
EXPECTATION = 7


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
