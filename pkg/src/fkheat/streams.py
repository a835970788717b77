"""Deterministic counter-based random streams.

Every stochastic operation derives its generators from a master seed, a
stream label, and a replication (or chunk) index through Philox keys, so
a given replication produces identical draws no matter how work is split
across workers or batches.

Two granularities are used:

* per-replication streams (``replication_rng``) where a single replication
  involves substantial work, e.g. one Monte Carlo replication of a moment
  estimate;
* per-chunk streams (``chunk_rng``) for cheap vectorized ensembles, where a
  chunk of ``CHUNK`` replications shares one stream and is drawn in a single
  vectorized call.  The chunk size is a fixed constant and is part of the
  determinism contract.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

# Fixed chunk size for vectorized ensembles; changing it changes ensembles.
CHUNK = 4096

# Stream labels.  Distinct labels guarantee independent streams even when
# the same (seed, index) pair is used by different samplers.
BM = 1
FBM = 2
FIELD_Y = 3
FIELD_W = 4
MOMENT = 5
SCALING = 6
RUNNING_MAX = 7
MGF_U = 8
NESTED = 9
GENERIC = 10


def philox_key(seed: int, stream: int, index: int = 0) -> np.ndarray:
    """Derive a 128-bit Philox key from (master seed, stream label, index)."""
    ss = np.random.SeedSequence([int(seed), int(stream), int(index)])
    return ss.generate_state(2, np.uint64)


def substream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Generator for one (seed, stream, index) triple."""
    return np.random.Generator(np.random.Philox(key=philox_key(seed, stream, index)))


def replication_rng(seed: int, stream: int, replication: int) -> np.random.Generator:
    """Per-replication stream; identical for serial and parallel execution."""
    return substream(seed, stream, replication)


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    """Stream shared by the fixed-size replication chunk ``chunk``."""
    return substream(seed, stream, chunk)


def iter_chunks(n: int, chunk_size: int = CHUNK) -> Iterator[tuple[int, int, int]]:
    """Yield (chunk_index, lo, hi) covering range(n) in fixed-size chunks."""
    c = 0
    lo = 0
    while lo < n:
        hi = min(lo + chunk_size, n)
        yield c, lo, hi
        c += 1
        lo = hi
