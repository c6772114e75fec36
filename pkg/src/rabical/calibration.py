"""Amplitude correction from an extracted Rabi-frequency curve.

Pipeline: interpolate the measured curve, fit a through-origin linear model
of the undistorted response, and for each desired amplitude find the
applied amplitude whose measured Rabi frequency matches the model target
(global minimization of the squared frequency mismatch over the
piecewise-linear curve). The commanded-to-applied ratio is the voltage
correction factor; each point carries the amplitude interval within which
the induced frequency error stays inside +/-epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fitting import RabiFrequencyCurve

DEFAULT_EPSILON = 0.01
# default model-fit window, as fractions of the curve's amplitude span:
# skips the unreliable low-amplitude fits and stops short of the strongest
# distortion features on the default grids
DEFAULT_FIT_REGION = (0.10, 0.45)


@dataclass(frozen=True)
class LinearModel:
    """Undistorted response model omega = slope * amplitude (zero intercept)."""

    slope: float
    fit_region_mv: tuple[float, float]

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("slope must be > 0")

    def predict(self, amplitudes_mv):
        return self.slope * np.asarray(amplitudes_mv, dtype=np.float64)


@dataclass(frozen=True)
class CorrectionTable:
    """Per-amplitude voltage correction factors with error bands.

    vc_factors[i] is applied_mv[i] / amplitudes_mv[i]; band_low/high bound
    the applied amplitudes that keep the induced Rabi frequency within
    +/-epsilon of target.
    """

    amplitudes_mv: np.ndarray
    vc_factors: np.ndarray
    applied_mv: np.ndarray
    band_low_mv: np.ndarray
    band_high_mv: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    source_qubit: str = ""

    def __post_init__(self):
        amps = np.array(self.amplitudes_mv, dtype=np.float64)
        n = amps.size
        fields = {}
        for name in ("vc_factors", "applied_mv", "band_low_mv", "band_high_mv"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"{name} must match amplitudes_mv in length")
            fields[name] = arr
        if n == 0:
            raise ValueError("correction table must not be empty")
        if np.any(np.diff(amps) <= 0):
            raise ValueError("amplitudes_mv must be strictly increasing")
        if np.any(fields["vc_factors"] <= 0):
            raise ValueError("vc_factors must be > 0")
        if np.any(fields["band_low_mv"] > fields["applied_mv"]) or np.any(
            fields["applied_mv"] > fields["band_high_mv"]
        ):
            raise ValueError("band_low <= applied <= band_high violated")
        if not 0 <= self.epsilon:
            raise ValueError("epsilon must be >= 0")
        for name, arr in {"amplitudes_mv": amps, **fields}.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def apply(self, a_mv):
        """Corrected applied amplitude(s) for commanded amplitude(s) a_mv.

        VC factors are linearly interpolated between table knots; requests
        outside the table domain are rejected.
        """
        a = np.asarray(a_mv, dtype=np.float64)
        if np.any(a < self.amplitudes_mv[0]) or np.any(a > self.amplitudes_mv[-1]):
            raise ValueError(
                "amplitude outside correction domain [%g, %g] mV"
                % (self.amplitudes_mv[0], self.amplitudes_mv[-1])
            )
        out = a * np.interp(a, self.amplitudes_mv, self.vc_factors)
        return float(out) if np.isscalar(a_mv) else out


@dataclass(frozen=True)
class CorrectionBuild:
    table: CorrectionTable
    excluded_mv: np.ndarray  # grid points whose target frequency is unreachable


def interpolate_curve(curve: RabiFrequencyCurve, a_mv):
    """Piecewise-linear interpolation of the curve; exact at knots."""
    amps = curve.amplitudes_mv
    a = np.asarray(a_mv, dtype=np.float64)
    if np.any(a < amps[0]) or np.any(a > amps[-1]):
        raise ValueError(
            "amplitude outside curve domain [%g, %g] mV (extrapolation rejected)"
            % (amps[0], amps[-1])
        )
    out = np.interp(a, amps, curve.omegas)
    return float(out) if np.isscalar(a_mv) else out


def fit_linear_model(
    curve: RabiFrequencyCurve, region: tuple[float, float] | None = None
) -> LinearModel:
    """Through-origin weighted least squares over an amplitude window.

    slope = sum(w*A*omega) / sum(w*A^2) with w = 1/stderr^2. The default
    window spans [10%, 45%] of the curve's amplitude span.
    """
    amps = curve.amplitudes_mv
    if region is None:
        span = amps[-1] - amps[0]
        region = (amps[0] + DEFAULT_FIT_REGION[0] * span, amps[0] + DEFAULT_FIT_REGION[1] * span)
    lo, hi = float(region[0]), float(region[1])
    mask = (amps >= lo) & (amps <= hi)
    if mask.sum() < 10:
        raise ValueError(f"fit region [{lo:g}, {hi:g}] mV holds {int(mask.sum())} points; need >= 10")
    a = amps[mask]
    om = curve.omegas[mask]
    se = curve.stderrs[mask]
    if np.all(se > 0):
        w = 1.0 / (se * se)
    else:
        positive = se[se > 0]
        floor = positive.min() if positive.size else 1.0
        w = 1.0 / np.maximum(se, floor) ** 2
    slope = float(np.sum(w * a * om) / np.sum(w * a * a))
    return LinearModel(slope=slope, fit_region_mv=(lo, hi))


def achievable_range(curve: RabiFrequencyCurve) -> tuple[float, float]:
    return float(curve.omegas.min()), float(curve.omegas.max())


def invert_amplitude(curve: RabiFrequencyCurve, target_omega: float) -> float:
    """Amplitude minimizing (curve(A) - target)^2 over the whole curve.

    Exact segment-wise scan: on each linear segment the minimizer is either
    the crossing point (objective exactly 0) or the closer endpoint. Ties
    resolve to the smallest amplitude, so results are reproducible even on
    plateaus and folded (non-monotone) curves.
    """
    w_lo, w_hi = achievable_range(curve)
    if not w_lo <= target_omega <= w_hi:
        raise ValueError(
            f"target {target_omega:g} rad/us outside achievable range [{w_lo:g}, {w_hi:g}]"
        )
    amps = curve.amplitudes_mv
    om = curve.omegas
    if amps.size == 1:
        return float(amps[0])
    a0, a1 = amps[:-1], amps[1:]
    w0, w1 = om[:-1], om[1:]
    seg_lo = np.minimum(w0, w1)
    seg_hi = np.maximum(w0, w1)
    inside = (target_omega >= seg_lo) & (target_omega <= seg_hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = a0 + (target_omega - w0) * (a1 - a0) / (w1 - w0)
    flat = w1 == w0
    cross = np.where(flat, a0, cross)
    end_obj0 = (w0 - target_omega) ** 2
    end_obj1 = (w1 - target_omega) ** 2
    cand_a = np.where(inside, cross, np.where(end_obj0 <= end_obj1, a0, a1))
    cand_obj = np.where(inside, 0.0, np.minimum(end_obj0, end_obj1))
    order = np.lexsort((cand_a, cand_obj))
    return float(cand_a[order[0]])


def _band_walk(
    curve: RabiFrequencyCurve, a_o: float, target_omega: float, epsilon: float
) -> tuple[float, float]:
    """Connected interval around a_o where |omega - target| <= eps*target."""
    amps = curve.amplitudes_mv
    om = curve.omegas
    lo_thr = (1.0 - epsilon) * target_omega
    hi_thr = (1.0 + epsilon) * target_omega

    def crossing(a_in, w_in, a_out, w_out):
        # the segment leaves the tolerance strip between a_in and a_out
        bound = hi_thr if w_out > hi_thr else lo_thr
        return a_in + (bound - w_in) * (a_out - a_in) / (w_out - w_in)

    w_at_o = float(np.interp(a_o, amps, om))
    idx = int(np.searchsorted(amps, a_o, side="right") - 1)
    idx = min(max(idx, 0), amps.size - 2) if amps.size > 1 else 0

    a_in, w_in = a_o, w_at_o
    low = a_in
    for i in range(idx, -1, -1):
        a_next, w_next = amps[i], om[i]
        if a_next >= a_in:
            continue
        if lo_thr <= w_next <= hi_thr:
            a_in, w_in = a_next, w_next
            low = a_in
            continue
        low = crossing(a_in, w_in, a_next, w_next)
        break

    a_in, w_in = a_o, w_at_o
    high = a_in
    for i in range(idx + 1, amps.size):
        a_next, w_next = amps[i], om[i]
        if a_next <= a_in:
            continue
        if lo_thr <= w_next <= hi_thr:
            a_in, w_in = a_next, w_next
            high = a_in
            continue
        high = crossing(a_in, w_in, a_next, w_next)
        break

    return float(low), float(high)


def error_band(
    curve: RabiFrequencyCurve, target_omega: float, epsilon: float
) -> tuple[float, float]:
    """Amplitude interval around the Eq.-2 solution holding the relative
    frequency error within +/-epsilon.

    Both (1-epsilon)*target and (1+epsilon)*target must be achievable on
    the curve; the band is found by walking outward from the inversion
    point along the interpolated curve.
    """
    w_lo, w_hi = achievable_range(curve)
    if not (w_lo <= (1.0 - epsilon) * target_omega and (1.0 + epsilon) * target_omega <= w_hi):
        raise ValueError(
            "tolerance edges (1+/-eps)*target outside achievable range "
            f"[{w_lo:g}, {w_hi:g}]"
        )
    a_o = invert_amplitude(curve, target_omega)
    return _band_walk(curve, a_o, target_omega, epsilon)


def build_correction(
    curve: RabiFrequencyCurve,
    model: LinearModel,
    grid_mv,
    epsilon: float = DEFAULT_EPSILON,
) -> CorrectionBuild:
    """Construct the voltage-correction table for the desired amplitude grid.

    Per grid point: target = slope * A_c, A_o from inversion, VC = A_o/A_c.
    Grid points whose target falls outside the measured curve's frequency
    range (and A_c = 0, where VC is undefined) are excluded and reported.
    Band edges at the extreme grid points are clipped to the measured
    amplitude domain.
    """
    grid = np.asarray(grid_mv, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid_mv must be a non-empty 1-D sequence")
    w_lo, w_hi = achievable_range(curve)
    targets = model.predict(grid)
    usable = (grid > 0) & (targets >= w_lo) & (targets <= w_hi)
    if not usable.any():
        raise ValueError("no grid point has an achievable target frequency")

    kept = grid[usable]
    vc = np.empty_like(kept)
    applied = np.empty_like(kept)
    band_lo = np.empty_like(kept)
    band_hi = np.empty_like(kept)
    for i, (a_c, target) in enumerate(zip(kept, targets[usable])):
        a_o = invert_amplitude(curve, target)
        vc[i] = a_o / a_c
        # store applied as vc*a_c so the multiplicative identity is exact
        applied[i] = vc[i] * a_c
        lo, hi = _band_walk(curve, a_o, target, epsilon)
        band_lo[i] = min(lo, applied[i])
        band_hi[i] = max(hi, applied[i])

    table = CorrectionTable(
        amplitudes_mv=kept,
        vc_factors=vc,
        applied_mv=applied,
        band_low_mv=band_lo,
        band_high_mv=band_hi,
        epsilon=epsilon,
        source_qubit=curve.qubit_label,
    )
    return CorrectionBuild(table=table, excluded_mv=grid[~usable])


def band_overlap(table_a: CorrectionTable, table_b: CorrectionTable) -> float:
    """Fraction of the common amplitude grid where the two applied-amplitude
    bands intersect. 1.0 means one correction serves both channels within
    their epsilon.
    """
    lo = max(table_a.amplitudes_mv[0], table_b.amplitudes_mv[0])
    hi = min(table_a.amplitudes_mv[-1], table_b.amplitudes_mv[-1])
    if lo > hi:
        raise ValueError("correction tables have disjoint amplitude domains")
    common = np.unique(np.concatenate([table_a.amplitudes_mv, table_b.amplitudes_mv]))
    common = common[(common >= lo) & (common <= hi)]
    a_lo = np.interp(common, table_a.amplitudes_mv, table_a.band_low_mv)
    a_hi = np.interp(common, table_a.amplitudes_mv, table_a.band_high_mv)
    b_lo = np.interp(common, table_b.amplitudes_mv, table_b.band_low_mv)
    b_hi = np.interp(common, table_b.amplitudes_mv, table_b.band_high_mv)
    intersects = np.maximum(a_lo, b_lo) <= np.minimum(a_hi, b_hi)
    return float(np.mean(intersects))


def percent_error_report(
    curve: RabiFrequencyCurve, model: LinearModel
) -> tuple[np.ndarray, np.ndarray]:
    """Relative Rabi-frequency error (in percent) of each curve point
    against the linear model. A = 0 is excluded (undefined relative error).
    Returns (amplitudes, percent_errors).
    """
    mask = curve.amplitudes_mv > 0
    amps = curve.amplitudes_mv[mask]
    predicted = model.predict(amps)
    pct = 100.0 * np.abs(curve.omegas[mask] - predicted) / predicted
    return amps, pct
