"""Hash-derived RNG streams so repetitions can run in parallel and still be
bit-reproducible regardless of execution order."""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed path keys must be nonnegative, got {key}")
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"seed path keys must be int or str, got {type(key)!r}")


def stream_rng(base_seed: int, *path) -> np.random.Generator:
    """Generator for the stream identified by (base_seed, *path).

    The same (base_seed, path) always yields the same stream; distinct paths
    yield statistically independent streams.
    """
    entropy = [_key_to_int(base_seed)] + [_key_to_int(k) for k in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def stream_seed(base_seed: int, *path) -> int:
    """A derived integer seed, for APIs that take a seed rather than a rng."""
    entropy = [_key_to_int(base_seed)] + [_key_to_int(k) for k in path]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
