"""
Counter-based random streams keyed by (master seed, replication, role).

Each replication and each consumer inside it gets its own Philox stream, so
results never depend on how replications are scheduled across threads.
"""

from enum import IntEnum

import numpy as np


class StreamRole(IntEnum):
    PATH = 0
    CONTAMINATION = 1
    SIMULATION = 2
    OPTIMIZER = 3
    COVARIANCE = 4


def make_stream(master_seed: int, replication: int = 0, role: StreamRole = StreamRole.PATH) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication), int(role)))
    return np.random.Generator(np.random.Philox(seq))
