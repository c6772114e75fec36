"""Vectorized numpy implementation of the binomial shot-sampling kernel."""

from __future__ import annotations

import numpy as np

from .rng import GOLDEN, mix64, unit_floats

# Cap on temporary array size: points-per-block * shots-per-block uint64s.
_BLOCK_ELEMENTS = 4_000_000


def binomial_counts(keys: np.ndarray, p: np.ndarray, n_shots: int) -> np.ndarray:
    """Exact binomial draws, one per (key, p) pair, as sums of Bernoulli
    comparisons against the key's counter stream.

    Bit-identical to the numba twin: both evaluate u(key, i) < p for
    i = 0..n_shots-1 with the same uint64 mixing.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64).ravel()
    p = np.ascontiguousarray(p, dtype=np.float64).ravel()
    counts = np.zeros(keys.shape[0], dtype=np.int64)

    pts_per_block = max(1, _BLOCK_ELEMENTS // max(n_shots, 1))
    shot_block = min(n_shots, _BLOCK_ELEMENTS)
    with np.errstate(over="ignore"):
        for lo in range(0, keys.shape[0], pts_per_block):
            hi = min(lo + pts_per_block, keys.shape[0])
            kcol = keys[lo:hi, None]
            pcol = p[lo:hi, None]
            for s0 in range(0, n_shots, shot_block):
                s1 = min(s0 + shot_block, n_shots)
                idx = np.arange(s0 + 1, s1 + 1, dtype=np.uint64) * GOLDEN
                u = unit_floats(mix64(kcol + idx[None, :]))
                counts[lo:hi] += (u < pcol).sum(axis=1)
    return counts
