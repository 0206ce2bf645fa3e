"""Reproducible randomness.

Every random object is a pure function of a 64-bit seed. Trial seeds are
derived from a master seed with ``numpy.random.SeedSequence`` spawn keys, so a
trial can be regenerated from ``(master_seed, trial_index)`` alone and in any
order. Weight entries are produced by a counter-based hash of ``(seed, i, j)``
so a weight matrix never has to be materialised.
"""
import logging

import numpy as np

from corank.constants import DEFAULT_REGULAR_RETRIES
from corank.errors import ParameterError, SamplingError

LOGGER = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1

MASK_STREAM = 1
WEIGHT_STREAM = 2
DIAGONAL_STREAM = 3
GRAPH_STREAM = 4

_GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


def derive_seed(seed, *keys):
    """Derive an independent 64-bit seed from ``seed`` and a path of integer keys."""
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_generator(seed, *keys):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(derive_seed(seed, *keys))))


def _splitmix64(values):
    with np.errstate(over='ignore'):
        z = values + _GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        return z ^ (z >> np.uint64(31))


def hash_entries(seed, rows, cols, n):
    """Counter-based 64-bit hash of cells ``(rows[k], cols[k])`` of an ``n``-column grid."""
    rows = np.asarray(rows, dtype=np.uint64)
    cols = np.asarray(cols, dtype=np.uint64)
    with np.errstate(over='ignore'):
        counters = rows * np.uint64(n) + cols
        keyed = counters ^ _splitmix64(np.full(counters.shape, seed & SEED_MASK, dtype=np.uint64))
        return _splitmix64(_splitmix64(keyed))


def random_regular_graph(d, n, seed, retries=DEFAULT_REGULAR_RETRIES):
    """Sample a simple d-regular graph on ``n`` vertices by the configuration model.

    Stubs are paired uniformly at random and the whole pairing is rejected as
    soon as it produces a loop or a repeated edge. Returns a sorted tuple of
    edges ``(i, j)`` with ``i < j``.
    """
    if (n * d) % 2 != 0:
        message = 'n * d must be even'
        LOGGER.critical(message)
        raise ParameterError(message)
    if not 0 <= d < n:
        message = 'the 0 <= d < n inequality must be satisfied'
        LOGGER.critical(message)
        raise ParameterError(message)

    if d == n - 1:
        # K_n is the only (n-1)-regular simple graph
        return tuple((i, j) for i in range(n) for j in range(i + 1, n))

    generator = make_generator(seed, GRAPH_STREAM)
    stubs = np.repeat(np.arange(n), d)

    def try_creation():
        edges = set()
        shuffled = generator.permutation(stubs)
        for s1, s2 in zip(shuffled[0::2], shuffled[1::2]):
            s1, s2 = int(s1), int(s2)
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 == s2 or (s1, s2) in edges:
                return None
            edges.add((s1, s2))
        return edges

    for attempt in range(retries):
        edges = try_creation()
        if edges is not None:
            LOGGER.debug(f'{d}-regular graph on {n} vertices accepted after {attempt + 1} pairings')
            return tuple(sorted(edges))

    message = f'Configuration model found no simple {d}-regular graph on {n} vertices in {retries} pairings.'
    LOGGER.error(message)
    raise SamplingError(message)
