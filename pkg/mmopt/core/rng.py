# mmopt/core/rng.py
"""
Counter-based random streams and worker-count plumbing.

Every random draw in mmopt comes from a Philox generator keyed by
``SeedSequence(seed, spawn_key=(stream, index))``.  ``stream`` names the
purpose of the draws, ``index`` is a chunk or step counter.  Two calls with
the same (seed, stream, index) always produce the same numbers, regardless
of which thread runs them or in which order.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

# Fixed chunk size for Monte Carlo estimation and sampling.
CHUNK_SIZE = 1 << 16

# Stream identifiers.  Values are part of the reproducibility contract.
STREAM_VALUATIONS = 0
STREAM_TRAIN_BATCH = 1
STREAM_INIT = 2
STREAM_PRUNE = 3
STREAM_MEASURE = 4
STREAM_RANDOM_MENU = 5

THREADS_ENV = "MM_OPT_THREADS"

SEED_MASK = (1 << 64) - 1


def stream_generator(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for ``(seed, stream, index)``."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_bounds(n: int, chunk_size: int = CHUNK_SIZE):
    """Yield ``(chunk_index, start, stop)`` covering ``range(n)``."""
    for k, start in enumerate(range(0, n, chunk_size)):
        yield k, start, min(start + chunk_size, n)


def worker_count(requested: Optional[int] = None) -> int:
    """
    Number of worker threads to use.

    ``requested`` wins when given; otherwise ``MM_OPT_THREADS`` caps the
    number of available cores.
    """
    cores = os.cpu_count() or 1
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, min(cores, int(raw)))
        except ValueError:
            pass
    return cores
