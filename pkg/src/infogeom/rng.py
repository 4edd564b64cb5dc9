"""Seeded random streams.

Every stochastic routine takes an integer seed and builds a PCG64 generator
from ``SeedSequence(seed, spawn_key=stream)``. Independent draws inside one
routine use distinct stream keys, e.g. a mixture sample uses stream ``(0,)``
for component labels and ``(1,)`` for the Gaussian noise. PCG64 output and
the SeedSequence hashing are platform independent, so a (seed, stream) pair
always reproduces the same numbers for a given numpy release.
"""

import numpy as np


def make_rng(seed, *stream):
    """Return a generator for ``seed`` on the sub-stream ``stream``."""
    if seed is None:
        raise ValueError("a seed is required")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))
