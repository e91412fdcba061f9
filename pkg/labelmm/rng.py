#!/usr/bin/env python
"""
Seed streams.

Every random consumer in LabelMM draws from a numpy PCG64 generator derived
from one integer seed and a stream name, so that shuffling, initialisation
and noise injection never share state. Streams are reproducible across
runs and platforms for a given numpy version.
"""
import zlib

import numpy as np

__author__ = "LabelMM developers"

SEED_MASK = (1 << 64) - 1


class SeedStream(object):
    """
    A splittable source of independent generators keyed by name.

    >>> streams = SeedStream(7)
    >>> a = streams.generator('shuffle').random()
    >>> b = SeedStream(7).generator('shuffle').random()
    >>> a == b
    True
    """

    def __init__(self, seed):
        self.seed = int(seed) & SEED_MASK

    def _sequence(self, name, *keys):
        tag = zlib.crc32(name.encode('utf-8'))
        entropy = [self.seed, tag] + [int(k) & SEED_MASK for k in keys]
        return np.random.SeedSequence(entropy)

    def generator(self, name, *keys):
        """ a fresh PCG64 generator for the named stream """
        bits = np.random.PCG64(self._sequence(name, *keys))
        return np.random.Generator(bits)

    def child(self, name, *keys):
        """ a derived SeedStream, e.g. one per repetition """
        state = self._sequence(name, *keys).generate_state(2, dtype=np.uint64)
        return SeedStream(int(state[0]))


def generator(seed, name='default', *keys):
    return SeedStream(seed).generator(name, *keys)
