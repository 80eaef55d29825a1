"""Named, reproducible random substreams.

Every random draw in the package comes from ``substream(seed, *names)``.
Streams are Philox (counter based) keyed by the seed and the names, so the
numbers a computation sees do not depend on evaluation order.
"""

import zlib

import numpy as np


def _token(name):
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError("stream indices must be non-negative")
        return int(name)
    return zlib.crc32(str(name).encode())


def seed_sequence(seed, *names):
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_token(n) for n in names))


def substream(seed, *names):
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *names)))


def sub_seed(seed, *names):
    """An integer seed for APIs that want one (e.g. scipy.stats.qmc)."""
    return int(seed_sequence(seed, *names).generate_state(1, dtype=np.uint32)[0])
