"""Seed derivation so every stochastic choice is keyed, not sequenced."""
import zlib

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def key_of(value):
    """Map an int or string key to a non-negative 32-bit integer."""
    if isinstance(value, (int, np.integer)):
        return int(value) & 0xFFFFFFFF
    return zlib.crc32(str(value).encode("utf-8"))


def derive_rng(seed, *keys):
    entropy = [int(seed) & 0xFFFFFFFF] + [key_of(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed, *keys):
    return int(derive_rng(seed, *keys).integers(0, 2**31 - 1))


def splitmix64(x):
    """Vectorised splitmix64 finaliser over a uint64 array."""
    z = np.asarray(x, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z & _MASK64


def cell_hash(seed, column, rows):
    """Per-(seed, column, row) 64-bit hash used for reproducible random imputation."""
    rows = np.asarray(rows, dtype=np.uint64)
    base = splitmix64(np.uint64(key_of(seed)) ^ (np.uint64(key_of(column)) << np.uint64(32)))
    with np.errstate(over="ignore"):
        return splitmix64(base ^ splitmix64(rows))
