"""Counter-based pseudorandom primitives shared by both kernel backends.

All randomness in the package flows through the splitmix64 finalizer below.
Draws are keyed by (seed, counter) instead of consuming a sequential stream,
so any subset of the work reproduces the same values and the numba and numpy
backends agree bit for bit (the mixing is pure uint64 arithmetic).
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

# Stream tags keep unrelated consumers of the same user seed decorrelated.
MAP_STREAM = np.uint64(0x5D8F_52C3_9E14_A7B1)
SCOPE_STREAM = np.uint64(0xC2B2_AE3D_27D4_EB4F)

# (k + 0.5) * 2**-53 with k = bits >> 11 maps uint64 to (0, 1), never hitting
# either endpoint, so degenerate binomials (p = 0 or 1) stay exact.
TWO_NEG53 = 2.0**-53

_SHIFT11 = np.uint64(11)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)


def mix64(z):
    """splitmix64 finalizer on uint64 scalars or arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = z + GOLDEN
        z = (z ^ (z >> _SHIFT30)) * MIX1
        z = (z ^ (z >> _SHIFT27)) * MIX2
        return z ^ (z >> _SHIFT31)


def seed_key(seed: int) -> np.uint64:
    """Fold an arbitrary Python integer seed into a well-mixed 64-bit key."""
    return np.uint64(mix64(np.uint64(seed & MASK64)))


def counter_bits(key: np.uint64, start: int, count: int) -> np.ndarray:
    """Raw uint64 draws at counters start..start+count-1 of the key's stream."""
    with np.errstate(over="ignore"):
        idx = np.arange(start, start + count, dtype=np.uint64) * GOLDEN
        return mix64(np.uint64(key) + idx)


def unit_floats(bits: np.ndarray) -> np.ndarray:
    """Map raw uint64 draws to float64 in the open interval (0, 1)."""
    return ((bits >> _SHIFT11).astype(np.float64) + 0.5) * TWO_NEG53


def uniforms(key: np.uint64, count: int, start: int = 0) -> np.ndarray:
    return unit_floats(counter_bits(key, start, count))


def gaussians(key: np.uint64, count: int) -> np.ndarray:
    """Standard normal draws via Box-Muller on consecutive counter pairs."""
    u = uniforms(key, 2 * count)
    u1 = u[0::2]
    u2 = u[1::2]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def float_bits(values) -> np.ndarray:
    """IEEE-754 bit patterns of float64 values, for value-keyed hashing."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    return v.view(np.uint64)


def point_seeds(seed: int, amplitudes_mv, durations_us) -> np.ndarray:
    """Per-point seeds for a (amplitude, duration) grid, keyed by the grid
    seed and the float bit patterns of the commanded values.

    Keying by value (not by index) makes any sub-grid reproduce the exact
    entries of the full run.
    """
    base = mix64(np.uint64(seed_key(seed)) ^ MAP_STREAM)
    amp_keys = mix64(base ^ float_bits(amplitudes_mv))
    return mix64(amp_keys[:, None] ^ float_bits(durations_us)[None, :])
