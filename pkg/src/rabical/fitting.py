"""Rabi-frequency extraction from fixed-amplitude time traces.

Each amplitude's trace is fit with a decaying cosine
p(tau) = offset - contrast * exp(-tau/decay_time) * cos(omega*tau)
by weighted nonlinear least squares (weights from the binomial standard
error of each probability estimate). The frequency is seeded from the
trace's discrete Fourier transform and polished with a damped least-squares
kernel; a small multi-start over neighboring DFT bins guards against
locking onto the wrong local minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import get_backend
from ._kernels._lmcore import LM_CONVERGED
from .errors import AllFitsExcludedError
from .experiment import RabiMap, _locked_array

_MAX_ITER = 200
_VARIANCE_FLOOR = 0.01
# fits with stderr/omega above this are dropped from extracted curves
RELATIVE_STDERR_CUTOFF = 0.5


@dataclass(frozen=True)
class RabiTrace:
    """Excited-state probability versus pulse duration at one amplitude."""

    durations_us: np.ndarray
    p_values: np.ndarray
    shots: int
    amplitude_mv: float

    def __post_init__(self):
        object.__setattr__(self, "durations_us", _locked_array(self.durations_us, "durations_us"))
        p = np.array(self.p_values, dtype=np.float64)
        if p.shape != self.durations_us.shape:
            raise ValueError("durations_us and p_values must have equal length")
        if self.durations_us.size < 8:
            raise ValueError("a trace needs at least 8 points")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("p_values must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p_values", p)
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.amplitude_mv < 0:
            raise ValueError("amplitude_mv must be >= 0")


@dataclass(frozen=True)
class FitResult:
    omega: float
    omega_stderr: float
    decay_time: float
    contrast: float
    offset: float
    residual_norm: float
    converged: bool


@dataclass(frozen=True)
class ExcludedFit:
    amplitude_mv: float
    reason: str
    fit: FitResult


@dataclass(frozen=True)
class RabiFrequencyCurve:
    """Extracted Rabi frequency versus commanded amplitude, with 1-sigma errors."""

    amplitudes_mv: np.ndarray
    omegas: np.ndarray
    stderrs: np.ndarray
    qubit_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "amplitudes_mv", _locked_array(self.amplitudes_mv, "amplitudes_mv"))
        om = np.array(self.omegas, dtype=np.float64)
        se = np.array(self.stderrs, dtype=np.float64)
        if om.shape != self.amplitudes_mv.shape or se.shape != self.amplitudes_mv.shape:
            raise ValueError("amplitudes, omegas, stderrs must have equal length")
        if np.any(om < 0):
            raise ValueError("omegas must be >= 0")
        if np.any(se < 0):
            raise ValueError("stderrs must be >= 0")
        om.setflags(write=False)
        se.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "stderrs", se)

    def __len__(self):
        return self.amplitudes_mv.size


@dataclass(frozen=True)
class CurveExtraction:
    curve: RabiFrequencyCurve
    excluded: tuple[ExcludedFit, ...]


def initial_frequency_guess(trace: RabiTrace) -> float:
    """Frequency seed from the DFT magnitude peak of the mean-subtracted trace.

    Requires uniformly spaced durations (relative tolerance 1e-6). Returns
    0.0 when no nonzero bin stands out of the spectral noise floor (taken
    as 4x the median nonzero-bin magnitude).
    """
    tau = trace.durations_us
    steps = np.diff(tau)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise ValueError("initial_frequency_guess requires uniformly spaced durations")
    mags = np.abs(np.fft.rfft(trace.p_values - trace.p_values.mean()))
    if mags.size < 2:
        return 0.0
    k = 1 + int(np.argmax(mags[1:]))
    peak = mags[k]
    if peak == 0.0:
        return 0.0
    noise = 4.0 * float(np.median(mags[1:]))
    if peak <= noise:
        return 0.0
    return 2.0 * np.pi * k / (tau.size * dt)


def _refined_guess(trace: RabiTrace) -> float:
    """Sub-bin DFT peak location via 3-point parabolic interpolation."""
    tau = trace.durations_us
    dt = np.diff(tau).mean()
    mags = np.abs(np.fft.rfft(trace.p_values - trace.p_values.mean()))
    if mags.size < 2:
        return 0.0
    k = 1 + int(np.argmax(mags[1:]))
    x = float(k)
    if 1 <= k < mags.size - 1:
        a, b, c = mags[k - 1], mags[k], mags[k + 1]
        denom = a - 2.0 * b + c
        if denom != 0.0:
            shift = 0.5 * (a - c) / denom
            if abs(shift) <= 1.0:
                x = k + shift
    return 2.0 * np.pi * x / (tau.size * dt)


def _sign_change_guess(trace: RabiTrace) -> float:
    """Crude frequency from zero crossings; fallback for non-uniform grids."""
    centered = trace.p_values - trace.p_values.mean()
    signs = np.sign(centered[np.abs(centered) > 1e-12])
    crossings = int(np.sum(signs[1:] != signs[:-1])) if signs.size else 0
    span = trace.durations_us[-1] - trace.durations_us[0]
    return np.pi * crossings / span if span > 0 else 0.0


def trace_weights(trace: RabiTrace) -> np.ndarray:
    """Inverse-variance weights from the binomial error of each estimate."""
    p = trace.p_values
    var = np.maximum(p, _VARIANCE_FLOOR) * np.maximum(1.0 - p, _VARIANCE_FLOOR) / trace.shots
    return 1.0 / var


def damped_cosine(tau, omega, gamma, contrast, offset):
    """The fit model; gamma is the inverse decay time."""
    return offset - contrast * np.exp(-gamma * np.asarray(tau)) * np.cos(omega * np.asarray(tau))


def _omega_stderr(tau, w, theta) -> float:
    """1-sigma frequency error from the quadratic model of the objective."""
    omega, gamma, contrast, _ = theta
    env = np.exp(-gamma * tau)
    c = np.cos(omega * tau)
    s = np.sin(omega * tau)
    J = np.column_stack((contrast * tau * env * s, contrast * tau * env * c, -(env * c), np.ones_like(tau)))
    A = J.T @ (J * w[:, None])
    try:
        cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return math.inf
    var = cov[0, 0]
    if not np.isfinite(var) or var <= 0:
        return math.inf
    return math.sqrt(var)


def fit_rabi_frequency(trace: RabiTrace, backend: str | None = None) -> FitResult:
    """Weighted damped-cosine fit of one trace.

    Never raises on bad data: non-convergence and degenerate objectives are
    reported through the converged flag (with an stderr that does not
    understate the uncertainty).
    """
    tau = trace.durations_us
    y = trace.p_values
    w = trace_weights(trace)
    span = tau[-1] - tau[0]

    uniform = np.max(np.abs(np.diff(tau) - np.diff(tau).mean())) <= 1e-6 * np.diff(tau).mean()
    if uniform:
        omega0 = initial_frequency_guess(trace)
        refined = _refined_guess(trace)
        bin_width = 2.0 * np.pi / (tau.size * np.diff(tau).mean())
    else:
        omega0 = _sign_change_guess(trace)
        refined = omega0
        bin_width = 2.0 * np.pi / span

    # The DFT guess is bin-quantized; neighboring starts guard against
    # settling into the wrong local minimum (spaced ~2*pi/span). The
    # omega=0 start doubles as the no-oscillation reference fit: the
    # objective's omega-gradient vanishes at 0, so that run stays at 0.
    candidates = [refined, omega0]
    if omega0 == 0.0 or abs(refined - omega0) > 0.1 * bin_width:
        candidates += [omega0 + 0.5 * bin_width, omega0 + bin_width, omega0 - 0.5 * bin_width]
    candidates.append(0.0)
    seen = set()
    starts = []
    for cand in candidates:
        cand = max(cand, 0.0)
        if cand not in seen:
            seen.add(cand)
            starts.append(cand)

    contrast0 = 0.5 * (y.max() - y.min())
    offset0 = float(y.mean())
    gamma0 = 1.0 / span

    kern = get_backend(backend)
    best = None
    cost_flat = math.inf
    for start in starts:
        theta0 = np.array([start, gamma0, contrast0, offset0], dtype=np.float64)
        theta, _, cost, _, status = kern.lm_damped_cosine(tau, y, w, theta0, _MAX_ITER)
        if start == 0.0:
            cost_flat = cost
        if best is None or cost < best[1]:
            best = (theta.copy(), cost, status)
    theta, cost, status = best

    if theta[0] < 0:
        theta[0] = -theta[0]  # the objective is even in omega
    omega, gamma, contrast, offset = theta
    stderr = _omega_stderr(tau, w, theta)
    if omega > 0:
        # The local quadratic error bar understates when the likelihood in
        # omega is wide or multimodal (weak traces covering a fraction of a
        # period). Two honesty floors fix that:
        # 1. model-comparison: if the oscillating fit barely beats the
        #    no-oscillation fit (after a look-elsewhere discount for
        #    scanning the spectrum), the frequency is unidentified;
        # 2. profile likelihood: re-fit the nuisance parameters at probe
        #    frequencies around the optimum and convert the cost rise into
        #    an error bar.
        look_elsewhere = 2.0 * math.log(max(tau.size // 2, 2))
        evidence = max(cost_flat - cost - look_elsewhere, 1e-12)
        stderr = max(stderr, omega / math.sqrt(evidence))
        phi_hat = np.array([gamma, contrast, offset], dtype=np.float64)
        for factor in (0.25, 0.5, 0.75, 1.25, 1.5, 2.0):
            _, cost_probe, _ = kern.lm_fixed_omega(tau, y, w, factor * omega, phi_hat, _MAX_ITER)
            rise = max(cost_probe - cost, 1.0)
            stderr = max(stderr, abs(factor - 1.0) * omega / math.sqrt(rise))
    decay_time = math.inf if gamma == 0 else 1.0 / gamma
    return FitResult(
        omega=float(omega),
        omega_stderr=float(stderr),
        decay_time=float(decay_time),
        contrast=float(contrast),
        offset=float(offset),
        residual_norm=float(math.sqrt(cost)),
        converged=status == LM_CONVERGED,
    )


def extract_curve(rabi_map: RabiMap, backend: str | None = None) -> CurveExtraction:
    """Fit every amplitude of a map; split results into curve and rejects.

    An amplitude is rejected when its fit did not converge or when
    stderr/omega exceeds RELATIVE_STDERR_CUTOFF (low amplitudes drown in
    decay and shot noise). Every input amplitude lands in exactly one of
    the two outputs.
    """
    grid = rabi_map.grid
    kept_amp, kept_omega, kept_err = [], [], []
    excluded = []
    for i, amp in enumerate(grid.amplitudes_mv):
        trace = RabiTrace(
            durations_us=grid.durations_us,
            p_values=rabi_map.p_estimates[i],
            shots=grid.shots,
            amplitude_mv=float(amp),
        )
        fit = fit_rabi_frequency(trace, backend=backend)
        if not fit.converged:
            excluded.append(ExcludedFit(float(amp), "fit did not converge", fit))
        elif not fit.omega > 0 or fit.omega_stderr / fit.omega > RELATIVE_STDERR_CUTOFF:
            excluded.append(ExcludedFit(float(amp), "relative stderr above cutoff", fit))
        else:
            kept_amp.append(float(amp))
            kept_omega.append(fit.omega)
            kept_err.append(fit.omega_stderr)
    if not kept_amp:
        raise AllFitsExcludedError(
            f"all {grid.amplitudes_mv.size} per-amplitude fits were excluded"
        )
    curve = RabiFrequencyCurve(
        amplitudes_mv=kept_amp,
        omegas=kept_omega,
        stderrs=kept_err,
        qubit_label=rabi_map.qubit_label,
    )
    return CurveExtraction(curve=curve, excluded=tuple(excluded))
