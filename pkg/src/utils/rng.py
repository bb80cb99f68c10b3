"""
Named random streams for reproducible, parallel simulation.

Every stream is a numpy Generator over the counter-based Philox bit generator,
keyed by SeedSequence(entropy=master_seed, spawn_key=(purpose, *indices)).
Streams for different (purpose, trial, agent) keys are independent, and a
stream's output depends only on its key, never on the order in which streams
are created, so trials can run in any worker.
"""
from typing import Tuple

import numpy as np


# Purpose codes are part of the stream key; do not renumber.
PURPOSE_DATA = 0
PURPOSE_INIT = 1
PURPOSE_NOISE = 2
PURPOSE_DIAGNOSTIC = 3
PURPOSE_SCHEDULE = 4


def make_stream(master_seed: int, key: Tuple[int, ...]) -> np.random.Generator:
    """
    Build a Philox-backed generator for a stream key.

    Args:
        master_seed: Experiment master seed (non-negative)
        key: Tuple of non-negative integers naming the stream

    Returns:
        Independent numpy Generator
    """
    seed_seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seed_seq))


class StreamFactory:
    """
    Factory for the named random streams of one experiment.

    Attributes:
        master_seed: Seed every stream is derived from
    """

    def __init__(self, master_seed: int):
        if int(master_seed) < 0:
            raise ValueError("master_seed must be non-negative")
        self.master_seed = int(master_seed)

    def data(self, trial: int) -> np.random.Generator:
        """Stream for problem-instance data of one trial."""
        return make_stream(self.master_seed, (PURPOSE_DATA, trial))

    def init(self, trial: int) -> np.random.Generator:
        """Stream for the initial iterates of one trial."""
        return make_stream(self.master_seed, (PURPOSE_INIT, trial))

    def noise(self, trial: int, agent: int) -> np.random.Generator:
        """Stream for the gradient noise of one agent in one trial."""
        return make_stream(self.master_seed, (PURPOSE_NOISE, trial, agent))

    def noise_streams(self, trial: int, m: int) -> list:
        """All agents' noise streams for one trial, indexed by agent."""
        return [self.noise(trial, agent) for agent in range(m)]

    def diagnostic(self, index: int) -> np.random.Generator:
        """Stream for Monte-Carlo diagnostics."""
        return make_stream(self.master_seed, (PURPOSE_DIAGNOSTIC, index))

    def schedule_seed(self, trial: int) -> int:
        """Integer seed for randomized topology families."""
        return int(make_stream(self.master_seed, (PURPOSE_SCHEDULE, trial)).integers(0, 2**31 - 1))
