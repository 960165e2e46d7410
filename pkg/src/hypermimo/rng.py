"""Seeded, splittable random streams.

Every stochastic routine in the package takes an explicit
``numpy.random.Generator``. Streams are derived from an experiment seed and
a tuple of integer keys, so the same (seed, keys) pair always reproduces the
same numbers regardless of the order in which streams are created.
"""

import numpy as np

# Stream tags; the first key of every derived stream.
H0 = 1
BANK_SEQUENCE = 2
PRETRAIN = 3
TEST_SEQUENCE = 4
TRAIN = 5
HYPERNET_INIT = 6
EVALUATION = 7


def make_rng(seed, *keys):
    """Counter-based (Philox) generator for ``(seed, *keys)``."""
    keys = tuple(int(k) for k in keys)
    if any(k < 0 for k in keys):
        raise ValueError("stream keys must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=keys)
    return np.random.Generator(np.random.Philox(ss))


def snr_key(snr_db):
    """Non-negative integer key identifying an SNR value to 1e-3 dB."""
    return int(round((float(snr_db) + 1000.0) * 1000.0))


def complex_normal(rng, shape):
    """Circular complex Gaussian samples with E|z|^2 = 1."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)
