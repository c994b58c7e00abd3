"""Data reduction: feature amplitude per scan, sinusoid fit per sequence,
half-period statistics, and motor calibration.
"""

from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import ndimage, optimize, stats

from .simulate import CoincidenceTrace, MotorCalibration

MIN_TRACE_POINTS = 15
MIN_FIT_POINTS = 5


@dataclass(frozen=True)
class FeatureAmplitude:
    """Height of the scanned feature above background, as a fraction of background.

    Positive for a peak, negative for a dip.
    """

    rotation: float
    amplitude: float
    uncertainty: float
    background: float = float("nan")
    centre_delay: float = float("nan")
    direction: str = "cw"
    set_hz: float = float("nan")

    def __post_init__(self):
        if not self.uncertainty >= 0:
            raise ValueError("uncertainty must be >= 0")


def _trimmed_background(values):
    return float(stats.trim_mean(values, 0.1))


def extract_feature_amplitude(trace: CoincidenceTrace, edge_fraction: float = 0.2,
                              smoothing: float = 1.0) -> FeatureAmplitude:
    """Measure the central feature of a delay scan against its shoulders.

    The background is a 10%-trimmed mean of the outer ``edge_fraction`` of
    points on each side. The feature centre is the extremum of the
    Gaussian-smoothed, background-subtracted trace; the centre level comes
    from a Gaussian profile fitted to the counts with the background held
    fixed.
    """
    n = len(trace)
    if n < MIN_TRACE_POINTS:
        raise ValueError(f"trace has {n} points; need at least {MIN_TRACE_POINTS}")
    order = np.argsort(trace.delay)
    x = np.asarray(trace.delay, dtype=float)[order]
    y = np.asarray(trace.coincidences, dtype=float)[order]

    k = max(2, int(round(edge_fraction * n)))
    shoulders = np.concatenate([y[:k], y[-k:]])
    bg = _trimmed_background(shoulders)
    if not bg > 0:
        raise ValueError("background estimate is not positive")
    bg_var = bg / shoulders.size

    step = float(np.median(np.diff(x)))
    u = (x - x[0]) / step  # delay in units of the scan step
    smooth = ndimage.gaussian_filter1d(y - bg, smoothing, mode="nearest")
    inner = np.arange(k, n - k)
    ic = inner[np.argmax(np.abs(smooth[inner]))]

    sigma = np.sqrt(np.maximum(y, 1.0))

    def profile(uu, amp, centre, width):
        return bg + amp * np.exp(-0.5 * ((uu - centre) / width) ** 2)

    lo_c, hi_c = max(u[k], u[ic] - 3.0), min(u[n - k - 1], u[ic] + 3.0)
    p0 = [smooth[ic], u[ic], 2.0]
    bounds = ([-np.inf, lo_c, 0.5], [np.inf, hi_c, max(1.0, (n - 2 * k) / 2.0)])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            popt, pcov = optimize.curve_fit(profile, u, y, p0=p0, sigma=sigma, absolute_sigma=True,
                                            bounds=bounds, max_nfev=2000)
        amp, centre = float(popt[0]), float(popt[1])
        amp_var = float(pcov[0, 0]) if np.isfinite(pcov[0, 0]) else float(np.max(y)) / 3.0
    except (RuntimeError, ValueError):
        # fall back to a Gaussian-weighted mean around the smoothed extremum
        w = np.exp(-0.5 * (u - u[ic]) ** 2)
        amp = float(np.sum(w * (y - bg)) / np.sum(w))
        centre = float(u[ic])
        amp_var = float(np.sum(w**2 * np.maximum(y, 1.0)) / np.sum(w) ** 2)

    amplitude = amp / bg
    var = amp_var / bg**2 + amp**2 * bg_var / bg**4
    return FeatureAmplitude(
        rotation=float(trace.rotation_hz),
        amplitude=amplitude,
        uncertainty=math.sqrt(var),
        background=bg,
        centre_delay=float(x[0] + centre * step),
        direction=trace.direction,
        set_hz=float(trace.set_hz),
    )


@dataclass
class SequenceFit:
    """Best fit of ``amplitude * cos(2 pi f / period + phase) + offset``.

    ``f`` is the rotation speed in Hz (magnitude unless the fit was asked to
    use signed rotation). ``covariance`` is ordered (amplitude, period,
    phase, offset).
    """

    amplitude: float
    period: float
    phase: float
    offset: float
    covariance: np.ndarray = field(repr=False, default_factory=lambda: np.full((4, 4), np.nan))
    converged: bool = False
    cost: float = float("nan")
    n_points: int = 0
    direction: str = ""
    sequence_id: str = ""
    message: str = ""

    @property
    def half_period(self) -> float:
        return self.period / 2.0

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.abs(np.diag(self.covariance)))

    @property
    def initial_slope(self) -> float:
        """Derivative of the fitted curve at zero rotation."""
        return -self.amplitude * 2.0 * math.pi / self.period * math.sin(self.phase)

    def __call__(self, f):
        return self.amplitude * np.cos(2.0 * math.pi * np.asarray(f) / self.period + self.phase) + self.offset


def _wrap(phase):
    return (phase + math.pi) % (2.0 * math.pi) - math.pi


def _linear_start(f, y, w, period):
    theta = 2.0 * math.pi * f / period
    design = np.column_stack([np.cos(theta), np.sin(theta), np.ones_like(f)]) * w[:, None]
    coef, *_ = np.linalg.lstsq(design, y * w, rcond=None)
    a, b, c = coef
    return [math.hypot(a, b), period, math.atan2(-b, a), c]


def fit_sinusoid(points: Sequence[FeatureAmplitude], *, use_speed: bool = True, n_starts: int = 16,
                 period_bounds: tuple = (0.25, 10.0)) -> SequenceFit:
    """Weighted multi-start fit of a sinusoid to amplitude against rotation.

    Starting periods are spread geometrically over 0.4 to 4 times the span of
    rotation speeds; each start is seeded by the exact linear solution at
    that period. The period is bounded to ``period_bounds`` times the span
    and a fit that ends on a bound is flagged as not converged.
    """
    if len(points) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} points, got {len(points)}")
    f = np.array([abs(p.rotation) if use_speed else p.rotation for p in points], dtype=float)
    y = np.array([p.amplitude for p in points], dtype=float)
    s = np.array([p.uncertainty for p in points], dtype=float)
    have_sigma = bool(np.all(s > 0))
    if not have_sigma:
        s = np.where(s > 0, s, s[s > 0].min() if np.any(s > 0) else 1.0)
    w = 1.0 / s
    span = float(np.ptp(f))
    if not span > 0:
        raise ValueError("rotation values span no range")
    t_lo, t_hi = period_bounds[0] * span, period_bounds[1] * span

    def residuals(p):
        amp, period, phase, off = p
        return (amp * np.cos(2.0 * math.pi * f / period + phase) + off - y) * w

    best = None
    for period in np.geomspace(0.4, 4.0, n_starts) * span:
        p0 = _linear_start(f, y, w, period)
        res = optimize.least_squares(residuals, p0, bounds=([-np.inf, t_lo, -np.inf, -np.inf],
                                                            [np.inf, t_hi, np.inf, np.inf]),
                                     method="trf", xtol=1e-10, ftol=1e-14, gtol=1e-14, max_nfev=2000)
        if best is None or res.cost < best.cost:
            best = res

    amp, period, phase, off = best.x
    if amp < 0:
        amp, phase = -amp, phase + math.pi
    phase = _wrap(phase)

    dof = len(points) - 4
    try:
        cov = np.linalg.inv(best.jac.T @ best.jac)
        if not have_sigma and dof > 0:
            cov *= 2.0 * best.cost / dof
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.nan)

    at_bound = abs(period - t_lo) <= 1e-6 * t_lo or abs(period - t_hi) <= 1e-6 * t_hi
    finite = bool(np.all(np.isfinite(best.x)) and np.isfinite(best.cost))
    converged = bool(best.status > 0 and finite and not at_bound)
    message = best.message if not at_bound else "period stopped at a bound"
    return SequenceFit(amplitude=float(amp), period=float(period), phase=float(phase), offset=float(off),
                       covariance=cov, converged=converged, cost=float(best.cost), n_points=len(points),
                       direction=points[0].direction, message=message)


def common_background(points: Sequence[FeatureAmplitude]) -> List[FeatureAmplitude]:
    """Re-express feature heights relative to the mean background of the set.

    The interference background itself oscillates with rotation, so heights
    divided by each scan's own background are not sinusoidal in rotation.
    Dividing every excess by one shared background keeps the shape exact.
    """
    bgs = np.array([p.background for p in points], dtype=float)
    if not np.all(np.isfinite(bgs) & (bgs > 0)):
        raise ValueError("every point needs a positive background")
    ref = float(np.mean(bgs))
    return [replace(p, amplitude=p.amplitude * p.background / ref,
                    uncertainty=p.uncertainty * p.background / ref) for p in points]


def analyze_sequence(traces: Sequence[CoincidenceTrace], **fit_kwargs):
    """Feature heights (relative to the sequence-mean background) and their sinusoid fit."""
    points = common_background([extract_feature_amplitude(t) for t in traces])
    fit = fit_sinusoid(points, **fit_kwargs)
    fit.direction = traces[0].direction
    fit.sequence_id = traces[0].sequence_id
    return points, fit


@dataclass(frozen=True)
class GroupStats:
    n: int
    mean: float
    median: float


@dataclass
class HistogramStats:
    """Half-period statistics per direction group and in total."""

    groups: Dict[str, GroupStats]
    bin_edges: np.ndarray
    counts: Dict[str, np.ndarray]
    rejected: int = 0

    def __getitem__(self, key) -> GroupStats:
        return self.groups[key]


def _group_stats(values):
    v = np.asarray(values, dtype=float)
    return GroupStats(n=int(v.size), mean=float(np.mean(v)), median=float(np.median(v)))


def aggregate_histogram(fits: Iterable[SequenceFit], bin_width: float = 0.05,
                        directions: Optional[Iterable[str]] = None) -> HistogramStats:
    """Mean, median and histogram of half-periods for cw, acw and all fits.

    Fits that did not converge are left out and counted in ``rejected``.
    ``directions`` overrides the per-fit direction tags.
    """
    fits = list(fits)
    tags = list(directions) if directions is not None else [f.direction for f in fits]
    if len(tags) != len(fits):
        raise ValueError("one direction tag per fit is required")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    values: Dict[str, List[float]] = OrderedDict((("cw", []), ("acw", []), ("total", [])))
    rejected = 0
    for fit, tag in zip(fits, tags):
        if not fit.converged:
            rejected += 1
            continue
        if tag not in ("cw", "acw"):
            raise ValueError(f"unknown direction tag {tag!r}")
        values[tag].append(fit.half_period)
        values["total"].append(fit.half_period)

    groups = OrderedDict()
    for name, v in values.items():
        if v:
            groups[name] = _group_stats(v)
        else:
            warnings.warn(f"no converged fits in group {name!r}; group omitted", stacklevel=2)

    if values["total"]:
        allv = np.asarray(values["total"])
        lo = math.floor(allv.min() / bin_width) * bin_width
        hi = math.ceil(allv.max() / bin_width) * bin_width
        nbins = max(1, int(round((hi - lo) / bin_width)))
        edges = lo + bin_width * np.arange(nbins + 1)
    else:
        edges = np.array([0.0, bin_width])
    # half-open bins with the last one closed, as numpy.histogram
    counts = {name: np.histogram(v, bins=edges)[0] for name, v in values.items() if v}
    return HistogramStats(groups=dict(groups), bin_edges=edges, counts=counts, rejected=rejected)


def fit_power_law(set_hz, actual_hz) -> MotorCalibration:
    """Least-squares fit of ``log(actual) = log(a) + b log(set)``."""
    x = np.asarray(set_hz, dtype=float)
    y = np.asarray(actual_hz, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("set and actual frequencies must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 calibration points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("calibration frequencies must be positive")
    b, log_a = np.polyfit(np.log(x), np.log(y), 1)
    return MotorCalibration(a=float(np.exp(log_a)), b=float(b))
