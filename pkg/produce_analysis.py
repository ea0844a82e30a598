"""
Tactile Toolkit - Produce Analysis
Ripeness trends across daily sessions and bruise detection / localization
from shifts in settled relative resistance
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Set, Tuple

import numpy as np
from scipy import stats

from decay_fitter import DEFAULT_T_A, DEFAULT_T_C, fit_pixels
from errors import IncomparableSessions
from sensor_model import ResistanceTrace

logger = logging.getLogger(__name__)

DEFAULT_S_MIN = 0.5
DEFAULT_Z = 3.0
WELCH_ALPHA = 0.01
WIDTH_TOL_MM = 1e-9

SOFTENING = "softening"
STIFFENING = "stiffening"
STABLE = "stable"

NOMINAL = "nominal"
ANOMALOUS = "anomalous"

POLICY_MIDPOINT = "midpoint_threshold"
POLICY_WELCH = "welch_test"
BRUISE_POLICIES = (POLICY_MIDPOINT, POLICY_WELCH)


@dataclass(frozen=True)
class SessionRecord:
    """One session of repeated grasps on the same item at a fixed width"""

    session_id: str
    day_index: int
    c_stars: Tuple[float, ...]
    grasp_width: float
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "c_stars", tuple(float(c) for c in self.c_stars))
        if not self.c_stars:
            raise ValueError(f"Session '{self.session_id}' has no trials")

    @property
    def n_trials(self) -> int:
        return len(self.c_stars)

    @property
    def mean(self) -> float:
        return float(np.mean(self.c_stars))

    @property
    def std(self) -> float:
        """Sample standard deviation (0 for a single trial)"""
        return float(np.std(self.c_stars, ddof=1)) if self.n_trials > 1 else 0.0


@dataclass(frozen=True)
class RipenessTrend:
    slope: float
    direction: str
    intercept: float
    n_sessions: int


@dataclass(frozen=True)
class BruiseVerdict:
    verdict: str
    reference_mean: float
    observed_mean: float
    threshold: float
    margin: float
    policy: str = POLICY_MIDPOINT


def _check_widths(sessions: Sequence[SessionRecord]):
    width = sessions[0].grasp_width
    for s in sessions[1:]:
        if abs(s.grasp_width - width) > WIDTH_TOL_MM:
            raise IncomparableSessions(
                f"Session '{s.session_id}' grasped at {s.grasp_width} mm, expected {width} mm"
            )


def ripeness_trend(sessions: Sequence[SessionRecord], s_min: float = DEFAULT_S_MIN) -> RipenessTrend:
    """
    Slope of mean settled resistance per day.

    Fruit softening pushes c_star toward 0, so a positive slope above s_min
    reads as softening and a negative one below -s_min as stiffening.
    """
    if len(sessions) < 2:
        raise IncomparableSessions("A trend needs at least 2 sessions")
    _check_widths(sessions)
    days = [s.day_index for s in sessions]
    if days != sorted(days):
        raise IncomparableSessions("Sessions must be ordered by day_index")
    x = np.array(days, dtype=float)
    y = np.array([s.mean for s in sessions])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise IncomparableSessions("All sessions fall on the same day")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())

    if slope > s_min:
        direction = SOFTENING
    elif slope < -s_min:
        direction = STIFFENING
    else:
        direction = STABLE
    logger.info("Ripeness trend over %d sessions: %.3g %%/day (%s)", len(sessions), slope, direction)
    return RipenessTrend(slope, direction, intercept, len(sessions))


def _welch_threshold(reference: SessionRecord, observed: SessionRecord, alpha: float) -> float:
    """Smallest observed mean that a one-sided Welch test would call shifted"""
    var_r = reference.std ** 2 / reference.n_trials
    var_o = observed.std ** 2 / observed.n_trials
    se = math.sqrt(var_r + var_o)
    if se == 0.0:
        return reference.mean
    df = (var_r + var_o) ** 2 / (
        var_r ** 2 / (reference.n_trials - 1) + var_o ** 2 / (observed.n_trials - 1)
    )
    return reference.mean + float(stats.t.isf(alpha, df)) * se


def detect_bruise(reference: SessionRecord, observed: SessionRecord, policy: str = POLICY_MIDPOINT,
                  damaged: Optional[SessionRecord] = None, z: float = DEFAULT_Z,
                  alpha: float = WELCH_ALPHA) -> BruiseVerdict:
    """
    Compare an observed session with a healthy reference.

    midpoint_threshold: the threshold sits halfway between the reference and a
    damaged calibration session, or at reference mean + z * std without one.
    welch_test: one-sided unequal-variance t-test at level alpha; a bruise
    shows as a less negative mean.
    """
    if policy not in BRUISE_POLICIES:
        raise ValueError(f"Unknown bruise policy '{policy}'")
    _check_widths([reference, observed] + ([damaged] if damaged is not None else []))

    if policy == POLICY_MIDPOINT:
        if damaged is not None:
            threshold = 0.5 * (reference.mean + damaged.mean)
        else:
            threshold = reference.mean + z * reference.std
    else:
        if reference.n_trials < 3 or observed.n_trials < 3:
            raise IncomparableSessions("Welch test needs at least 3 trials per session")
        threshold = _welch_threshold(reference, observed, alpha)

    observed_mean = observed.mean
    verdict = ANOMALOUS if observed_mean > threshold else NOMINAL
    return BruiseVerdict(verdict, reference.mean, observed_mean, threshold, abs(observed_mean - threshold), policy)


def shifted_pixels(settled_per_pixel: Sequence[float], reference_per_pixel: Sequence[float],
                   margin) -> Set[int]:
    """
    Pixels whose settled value is less negative than their reference by more
    than margin (a scalar or one margin per pixel). NaN pixels are skipped.
    """
    settled = np.asarray(settled_per_pixel, dtype=float)
    reference = np.asarray(reference_per_pixel, dtype=float)
    if settled.shape != reference.shape:
        raise ValueError("Settled and reference values differ in pixel count")
    margins = np.broadcast_to(np.asarray(margin, dtype=float), settled.shape)
    valid = np.isfinite(settled) & np.isfinite(reference)
    shifted = np.zeros_like(valid)
    shifted[valid] = (settled[valid] - reference[valid]) > margins[valid]
    return {int(i) for i in np.flatnonzero(shifted)}


def reference_pixel_margins(reference_fits: Sequence[Sequence[float]], z: float = DEFAULT_Z) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pixel reference mean and z * std from repeated per-pixel settled estimates"""
    data = np.asarray(reference_fits, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise IncomparableSessions("Per-pixel reference needs at least 2 grasps")
    return np.nanmean(data, axis=0), z * np.nanstd(data, axis=0, ddof=1)


def pixel_settled(trace: ResistanceTrace, t_actuation: Optional[float] = None,
                  t_a: float = DEFAULT_T_A, t_c: float = DEFAULT_T_C) -> np.ndarray:
    """Settled estimate per pixel from per-pixel decay fits (NaN where a pixel has no fit)"""
    settled = np.full(trace.n_pixels, np.nan)
    for pixel, fit in enumerate(fit_pixels(trace, t_actuation, t_a, t_c)):
        if fit is not None:
            settled[pixel] = fit.c_star if fit.is_significant() else fit.window_mean
    return settled


def localize_bruise(trace: ResistanceTrace, reference_per_pixel: Sequence[float], margin,
                    t_actuation: Optional[float] = None, t_a: float = DEFAULT_T_A,
                    t_c: float = DEFAULT_T_C) -> Set[int]:
    """Pixels of a grasp whose settled response is weaker than the reference by more than margin"""
    flagged = shifted_pixels(pixel_settled(trace, t_actuation, t_a, t_c), reference_per_pixel, margin)
    if flagged:
        logger.info("Bruise suspected under pixels %s", sorted(flagged))
    return flagged
