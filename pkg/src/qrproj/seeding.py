"""Seed derivation: every trial gets an independent stream from (master seed, index)."""

import numpy as np


def trial_seed(master, index, *tags):
    """64-bit seed for trial ``index`` under ``master``; extra int tags separate purposes."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(index),) + tuple(int(t) for t in tags))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master, index, *tags):
    return np.random.default_rng(trial_seed(master, index, *tags))
