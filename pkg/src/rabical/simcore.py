"""Closed-form two-level dynamics under resonant square-envelope drive.

A qubit driven on resonance undergoes Rabi oscillations: the excited-state
probability is sin^2(omega_rabi * tau / 2) for an ideal lossless system.
Energy relaxation damps the oscillation toward the fully mixed state; the
decay-extended form used here multiplies the coherent term by
exp(-tau / tau_d) with tau_d = DECAY_TIME_FACTOR * t1.

Probabilities are plain floats in [0, 1]; measurement statistics come from
an exact binomial sampler keyed by an explicit integer seed, so every
simulated readout is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import get_backend
from ._kernels.rng import seed_key

# Effective decay time of the driven two-level system, in units of t1.
# Resonant driving relaxes toward the mixed state at twice the t1 time.
DECAY_TIME_FACTOR = 2.0


@dataclass(frozen=True)
class SimulatedQubit:
    """Two-level system parameters.

    transition_freq_ghz : qubit transition frequency (inert under the
        resonant-drive assumption, kept for bookkeeping)
    t1_us : energy relaxation time; math.inf disables decay
    rabi_rate_per_mv : Rabi angular frequency per mV of effective drive
        amplitude, rad/us per mV
    """

    transition_freq_ghz: float
    t1_us: float
    rabi_rate_per_mv: float
    label: str = ""

    def __post_init__(self):
        if not self.transition_freq_ghz > 0:
            raise ValueError("transition_freq_ghz must be > 0")
        if not self.t1_us > 0:
            raise ValueError("t1_us must be > 0")
        if not self.rabi_rate_per_mv > 0:
            raise ValueError("rabi_rate_per_mv must be > 0")

    @property
    def decay_time_us(self) -> float:
        return DECAY_TIME_FACTOR * self.t1_us


@dataclass(frozen=True)
class PulseSpec:
    """Commanded square-envelope control pulse."""

    amplitude_mv: float
    duration_us: float
    carrier_ghz: float

    def __post_init__(self):
        if self.amplitude_mv < 0:
            raise ValueError("amplitude_mv must be >= 0")
        if self.duration_us < 0:
            raise ValueError("duration_us must be >= 0")
        if not self.carrier_ghz > 0:
            raise ValueError("carrier_ghz must be > 0")


def ideal_excited_probability(omega_rabi: float, tau: float) -> float:
    """Excited-state probability of a lossless resonantly driven qubit.

    omega_rabi in rad/us, tau in us. Periodic in omega_rabi*tau with
    period 2*pi.
    """
    if omega_rabi < 0:
        raise ValueError("omega_rabi must be >= 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    return math.sin(0.5 * omega_rabi * tau) ** 2


def decayed_excited_probability(omega_rabi: float, tau: float, qubit: SimulatedQubit) -> float:
    """Excited-state probability with the t1 decay envelope.

    0.5 * (1 - exp(-tau/tau_d) * cos(omega_rabi*tau)) with
    tau_d = DECAY_TIME_FACTOR * t1. Reduces to the ideal form as t1 -> inf
    and to 0.5 as tau -> inf.
    """
    if omega_rabi < 0:
        raise ValueError("omega_rabi must be >= 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    envelope = math.exp(-tau / qubit.decay_time_us)
    return 0.5 * (1.0 - envelope * math.cos(omega_rabi * tau))


def decayed_probability_grid(
    omega_rabi: np.ndarray, tau: np.ndarray, decay_time_us: float
) -> np.ndarray:
    """Vectorized probability surface over (omega, tau): shape (n_omega, n_tau)."""
    om = np.asarray(omega_rabi, dtype=np.float64)[:, None]
    t = np.asarray(tau, dtype=np.float64)[None, :]
    return 0.5 * (1.0 - np.exp(-t / decay_time_us) * np.cos(om * t))


def sample_shots(p_true: float, n_shots: int, seed: int, backend: str | None = None) -> float:
    """Estimate a probability from n_shots simulated single-shot readouts.

    Returns k/n_shots with k an exact binomial draw determined entirely by
    (p_true, n_shots, seed).
    """
    if not 0.0 <= p_true <= 1.0:
        raise ValueError("p_true must be in [0, 1]")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    kern = get_backend(backend)
    keys = np.array([seed_key(seed)], dtype=np.uint64)
    p = np.array([p_true], dtype=np.float64)
    count = kern.binomial_counts(keys, p, n_shots)[0]
    return count / n_shots
