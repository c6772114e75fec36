"""Numba implementation of the binomial shot-sampling kernel."""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import GOLDEN, MIX1, MIX2, TWO_NEG53


@njit(cache=True)
def _mix64(z):
    z = z + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def binomial_counts(keys, p, n_shots):
    counts = np.zeros(keys.shape[0], dtype=np.int64)
    for j in range(keys.shape[0]):
        key = keys[j]
        pj = p[j]
        c = 0
        for i in range(n_shots):
            bits = _mix64(key + np.uint64(i + 1) * GOLDEN)
            u = (np.float64(bits >> np.uint64(11)) + 0.5) * TWO_NEG53
            if u < pj:
                c += 1
        counts[j] = c
    return counts
