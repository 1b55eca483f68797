"""Seed plumbing.

Every random stream in the package is a NumPy ``Generator`` backed by the
PCG64 bit generator. Child seeds are derived with ``SeedSequence`` spawn keys
so that a stream depends only on (master seed, key path), never on the order
in which streams are created.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**64 - 1], got {seed}")
    return seed


def derive_seed(master, *keys):
    """Return a 64-bit child seed for the key path ``keys`` under ``master``."""
    ss = np.random.SeedSequence(check_seed(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed, *keys):
    """PCG64 generator for ``seed``, optionally on a derived sub-stream."""
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
