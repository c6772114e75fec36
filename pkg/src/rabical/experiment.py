"""Simulated Rabi experiments on a distorted drive channel.

A channel is qubit + generator distortion + line attenuation. The Rabi map
sweeps (commanded amplitude, pulse duration); each grid point measures the
excited-state probability with a finite number of shots. Per-point shot
noise is keyed by the grid seed and the commanded (amplitude, duration)
values, so identical inputs reproduce bit-identical maps and any sub-grid
reproduces the corresponding entries of the full run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ._kernels import get_backend
from ._kernels.rng import mix64, point_seeds
from .distortion import DistortionProfile, apply_distortion
from .simcore import PulseSpec, SimulatedQubit, decayed_probability_grid, sample_shots

if TYPE_CHECKING:
    from .calibration import CorrectionTable


def _locked_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly increasing")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SweepGrid:
    """Measurement grid: commanded amplitudes x pulse durations."""

    amplitudes_mv: np.ndarray
    durations_us: np.ndarray
    shots: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "amplitudes_mv", _locked_array(self.amplitudes_mv, "amplitudes_mv"))
        object.__setattr__(self, "durations_us", _locked_array(self.durations_us, "durations_us"))
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if np.any(self.amplitudes_mv < 0) or np.any(self.durations_us < 0):
            raise ValueError("amplitudes and durations must be >= 0")


@dataclass(frozen=True)
class ChannelModel:
    """A drive line: distorting generator, frequency-dependent attenuation, qubit."""

    qubit: SimulatedQubit
    profile: DistortionProfile
    attenuation: float = 1.0

    def __post_init__(self):
        if not self.attenuation > 0:
            raise ValueError("attenuation must be > 0")

    def rabi_frequency(self, applied_mv):
        """Induced Rabi angular frequency for applied generator amplitude(s)."""
        effective = apply_distortion(self.profile, applied_mv)
        return self.qubit.rabi_rate_per_mv * self.attenuation * effective


@dataclass(frozen=True)
class RabiMap:
    """Excited-state probability estimates over a sweep grid."""

    grid: SweepGrid
    p_estimates: np.ndarray
    qubit_label: str
    corrected: bool = False

    def __post_init__(self):
        p = np.array(self.p_estimates, dtype=np.float64)
        expected = (self.grid.amplitudes_mv.size, self.grid.durations_us.size)
        if p.shape != expected:
            raise ValueError(f"p_estimates shape {p.shape} != grid shape {expected}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probability estimates must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p_estimates", p)


def rabi_point_seed(seed: int, amplitude_mv: float, duration_us: float) -> int:
    """Derived per-point seed; map entries equal sample_shots(p, shots, this)."""
    return int(point_seeds(seed, [amplitude_mv], [duration_us])[0, 0])


def _applied_amplitudes(grid_amplitudes: np.ndarray, correction) -> np.ndarray:
    if correction is None:
        return grid_amplitudes
    lo = correction.amplitudes_mv[0]
    hi = correction.amplitudes_mv[-1]
    if grid_amplitudes[0] < lo or grid_amplitudes[-1] > hi:
        raise ValueError(
            "correction table domain [%g, %g] mV does not cover grid amplitudes "
            "[%g, %g] mV" % (lo, hi, grid_amplitudes[0], grid_amplitudes[-1])
        )
    return correction.apply(grid_amplitudes)


def true_probability_map(
    channel: ChannelModel, grid: SweepGrid, correction: "CorrectionTable | None" = None
) -> np.ndarray:
    """Noiseless excited-state probability surface for the grid."""
    applied = _applied_amplitudes(grid.amplitudes_mv, correction)
    omegas = channel.rabi_frequency(applied)
    return decayed_probability_grid(omegas, grid.durations_us, channel.qubit.decay_time_us)


def run_rabi_map(
    channel: ChannelModel,
    grid: SweepGrid,
    correction: "CorrectionTable | None" = None,
    noiseless: bool = False,
    backend: str | None = None,
) -> RabiMap:
    """Simulate the full Rabi map experiment.

    Per point: the commanded amplitude is (optionally) mapped through the
    correction table, distorted by the generator, attenuated, and drives
    the qubit for the point's duration; the probability estimate is a
    finite-shot binomial sample unless noiseless=True.
    """
    p_true = true_probability_map(channel, grid, correction)
    if noiseless:
        p_est = p_true
    else:
        kern = get_backend(backend)
        keys = mix64(point_seeds(grid.seed, grid.amplitudes_mv, grid.durations_us))
        counts = kern.binomial_counts(keys.ravel(), p_true.ravel(), grid.shots)
        p_est = counts.reshape(p_true.shape) / grid.shots
    return RabiMap(
        grid=grid,
        p_estimates=p_est,
        qubit_label=channel.qubit.label,
        corrected=correction is not None,
    )


def run_amplitude_sweep(
    channel: ChannelModel,
    amplitudes_mv,
    fixed_duration_us: float,
    shots: int,
    seed: int,
    correction: "CorrectionTable | None" = None,
    noiseless: bool = False,
    backend: str | None = None,
) -> RabiMap:
    """Fixed-duration amplitude sweep: a single-duration-column Rabi map."""
    if not fixed_duration_us > 0:
        raise ValueError("fixed_duration_us must be > 0")
    grid = SweepGrid(
        amplitudes_mv=amplitudes_mv,
        durations_us=[fixed_duration_us],
        shots=shots,
        seed=seed,
    )
    return run_rabi_map(channel, grid, correction=correction, noiseless=noiseless, backend=backend)


def simulate_pulse(
    channel: ChannelModel,
    pulse: PulseSpec,
    shots: int | None = None,
    seed: int = 0,
    backend: str | None = None,
) -> float:
    """Excited-state probability for a single commanded pulse.

    With shots=None the exact probability is returned; otherwise a
    finite-shot estimate keyed like the corresponding map point.
    """
    omega = channel.rabi_frequency(pulse.amplitude_mv)
    envelope = np.exp(-pulse.duration_us / channel.qubit.decay_time_us)
    p = float(0.5 * (1.0 - envelope * np.cos(omega * pulse.duration_us)))
    if shots is None:
        return p
    return sample_shots(
        p, shots, rabi_point_seed(seed, pulse.amplitude_mv, pulse.duration_us), backend=backend
    )
