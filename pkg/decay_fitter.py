"""
Tactile Toolkit - Transient Decay Fitter
Predicts the settled relative resistance from the first seconds after a grasp
by fitting A * exp(-lambda * (t - t_p)) + C with variable projection
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from errors import EmptyWindow, InsufficientData, NoValidPixel
from sensor_model import ResistanceTrace

logger = logging.getLogger(__name__)

DEFAULT_T_A = 0.5
DEFAULT_T_C = 2.5
LAMBDA_MIN = 0.01
LAMBDA_MAX = 50.0
LAMBDA_GRID = 64
GOLDEN_RTOL = 1e-6
POLISH_STEPS = 3
MIN_SAMPLES = 4
SIGNIFICANCE_LEVEL = 1e-3

SETTLE_RAW = "raw_at_tc"
SETTLE_FIT = "decay_fit"
SETTLE_POLICIES = (SETTLE_RAW, SETTLE_FIT)

# Window edges computed from float sums must still include the sample sitting on them
_TIME_EPS = 1e-9
_INV_PHI = (math.sqrt(5) - 1) / 2
_INV_PHI2 = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class FitWindow:
    """Fit samples lie in [t_p + t_a, t_actuation + t_c]"""

    t_actuation: float
    t_p: float
    t_a: float = DEFAULT_T_A
    t_c: float = DEFAULT_T_C

    def __post_init__(self):
        if self.t_p < self.t_actuation:
            raise ValueError(f"Peak time {self.t_p} precedes actuation at {self.t_actuation}")
        if self.t_a < 0 or self.t_c <= 0:
            raise ValueError("t_a must be >= 0 and t_c > 0")
        if self.start >= self.end:
            raise InsufficientData(
                f"Fit window empty: t_p + t_a = {self.start:.4g} s is not before "
                f"t_actuation + t_c = {self.end:.4g} s"
            )

    @property
    def start(self) -> float:
        return self.t_p + self.t_a

    @property
    def end(self) -> float:
        return self.t_actuation + self.t_c


@dataclass(frozen=True)
class DecayFit:
    """Fitted transient; predict(t) -> c_star as t grows"""

    a_star: float
    lambda_star: float
    c_star: float
    rms_residual: float
    n_samples: int
    window: FitWindow
    degenerate: bool = False
    p_value: float = 1.0
    curvature_p_value: float = 1.0
    window_mean: float = 0.0
    objective_trace: Tuple[float, ...] = field(default=(), repr=False, compare=False)

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        values = self.a_star * np.exp(-self.lambda_star * (t - self.window.t_p)) + self.c_star
        return float(values) if values.ndim == 0 else values

    def is_significant(self, level: float = SIGNIFICANCE_LEVEL) -> bool:
        """Whether the exponential beats both a constant and a straight line at this level"""
        return not self.degenerate and self.p_value < level and self.curvature_p_value < level

    def to_record(self) -> dict:
        return {
            "a_star": self.a_star,
            "lambda_star": self.lambda_star,
            "c_star": self.c_star,
            "rms_residual": self.rms_residual,
            "t_p": self.window.t_p,
            "t_c": self.window.t_c,
        }


def detect_peak(trace: ResistanceTrace, t_actuation: float, t_c: float = DEFAULT_T_C,
                pixel: Optional[int] = None) -> float:
    """Time of the largest relative resistance in [t_actuation, t_actuation + t_c]"""
    series = trace.series(pixel)
    inside = (trace.times >= t_actuation - _TIME_EPS) & (trace.times <= t_actuation + t_c + _TIME_EPS)
    inside &= np.isfinite(series)
    if not inside.any():
        raise EmptyWindow(f"No samples in [{t_actuation}, {t_actuation + t_c}]")
    candidates = np.where(inside, series, -np.inf)
    return float(trace.times[int(np.argmax(candidates))])


def window_for(trace: ResistanceTrace, t_actuation: Optional[float] = None, t_a: float = DEFAULT_T_A,
               t_c: float = DEFAULT_T_C, pixel: Optional[int] = None,
               peak_within: Optional[float] = None) -> FitWindow:
    """
    Build a FitWindow from the last close_stop mark (or an explicit actuation
    time). peak_within narrows the peak search to that many seconds after
    actuation; the window still ends at t_actuation + t_c.
    """
    if t_actuation is None:
        t_actuation = trace.last_mark("close_stop")
        if t_actuation is None:
            raise EmptyWindow("Trace has no close_stop mark to anchor the fit")
    search = t_c if peak_within is None else min(t_c, peak_within)
    t_p = detect_peak(trace, t_actuation, search, pixel)
    return FitWindow(t_actuation=t_actuation, t_p=t_p, t_a=t_a, t_c=t_c)


def _linear_part(s: np.ndarray, y: np.ndarray, lam: float) -> Tuple[float, float, float]:
    """Closed-form (A, C) for a fixed rate and the squared residual norm"""
    e = np.exp(-lam * s)
    ec = e - e.mean()
    sxx = float(ec @ ec)
    if sxx <= 0.0:
        c = float(y.mean())
        r = y - c
        return 0.0, c, float(r @ r)
    a = float(ec @ (y - y.mean())) / sxx
    c = float(y.mean() - a * e.mean())
    r = y - (a * e + c)
    return a, c, float(r @ r)


def _grid_objective(s: np.ndarray, y: np.ndarray, lams: np.ndarray) -> np.ndarray:
    basis = np.exp(-np.outer(lams, s))
    centered = basis - basis.mean(axis=1, keepdims=True)
    yc = y - y.mean()
    sxx = np.einsum("ij,ij->i", centered, centered)
    sxy = centered @ yc
    syy = float(yc @ yc)
    reduction = np.divide(sxy * sxy, sxx, out=np.zeros_like(sxx), where=sxx > 0)
    return syy - reduction


def _golden_refine(objective, lo: float, hi: float, best: Tuple[float, float],
                   rtol: float) -> Tuple[Tuple[float, float], List[float]]:
    """
    Golden-section search on log(lambda) over [lo, hi].

    Returns the best (log_lambda, objective) seen and the best-so-far value
    after each iteration.
    """
    trace = [best[1]]
    a, b = lo, hi
    h = b - a
    c = a + _INV_PHI2 * h
    d = a + _INV_PHI * h
    fc = objective(c)
    fd = objective(d)
    while h > rtol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = _INV_PHI * h
            c = a + _INV_PHI2 * h
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            h = _INV_PHI * h
            d = a + _INV_PHI * h
            fd = objective(d)
        for u, f in ((c, fc), (d, fd)):
            if f < best[1]:
                best = (u, f)
        trace.append(best[1])
    return best, trace


def _parabolic_polish(objective, best: Tuple[float, float], h: float, lo: float, hi: float,
                      steps: int = POLISH_STEPS) -> Tuple[Tuple[float, float], List[float]]:
    trace = []
    for _ in range(steps):
        u, f0 = best
        fm, fp = objective(u - h), objective(u + h)
        curvature = fp - 2.0 * f0 + fm
        if not curvature > 0:
            break
        candidate = min(max(u - 0.5 * h * (fp - fm) / curvature, lo), hi)
        fu = objective(candidate)
        if not fu < f0:
            break
        h = max(abs(candidate - u), 1e-3 * h)
        best = (candidate, fu)
        trace.append(fu)
    return best, trace


def _significance(ss_reduced: float, ss_exp: float, n: int, extra: int) -> float:
    """p-value of the exponential model against a nested model with `extra` fewer parameters (F-test)"""
    if ss_reduced <= 0.0:
        return 1.0
    if ss_exp <= 0.0:
        return 0.0
    f_stat = ((ss_reduced - ss_exp) / extra) / (ss_exp / (n - 3))
    return float(stats.f.sf(max(f_stat, 0.0), extra, n - 3))


def _line_residual(s: np.ndarray, y: np.ndarray) -> float:
    sc = s - s.mean()
    sxx = float(sc @ sc)
    yc = y - y.mean()
    if sxx <= 0.0:
        return float(yc @ yc)
    r = yc - (float(sc @ yc) / sxx) * sc
    return float(r @ r)


def fit_arrays(times: np.ndarray, values: np.ndarray, window: FitWindow) -> DecayFit:
    """
    Fit the decay model to samples already restricted to the window.

    For each candidate rate the amplitude and offset come from a closed-form
    linear least-squares solve; the rate is located by a log-spaced grid, a
    golden-section refinement and a short parabolic polish.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    n = int(y.size)
    if n < MIN_SAMPLES:
        raise InsufficientData(f"Need at least {MIN_SAMPLES} samples in the fit window, got {n}")

    mean = float(y.mean())
    ss_const = float(((y - mean) ** 2).sum())
    scale = max(1.0, float(np.max(np.abs(y))))
    s = t - window.t_p

    if ss_const <= (1e-12 * scale) ** 2 * n:
        logger.warning("Flat series in fit window; returning degenerate fit at %.4g%%", mean)
        return DecayFit(
            a_star=0.0, lambda_star=LAMBDA_MIN, c_star=mean, rms_residual=math.sqrt(ss_const / n),
            n_samples=n, window=window, degenerate=True, p_value=1.0, window_mean=mean,
        )

    log_lams = np.linspace(math.log(LAMBDA_MIN), math.log(LAMBDA_MAX), LAMBDA_GRID)
    grid = _grid_objective(s, y, np.exp(log_lams))
    i = int(np.argmin(grid))
    lo, hi = log_lams[max(i - 1, 0)], log_lams[min(i + 1, LAMBDA_GRID - 1)]

    def objective(u: float) -> float:
        return _linear_part(s, y, math.exp(u))[2]

    best = (float(log_lams[i]), objective(float(log_lams[i])))
    best, history = _golden_refine(objective, lo, hi, best, GOLDEN_RTOL)
    best, polished = _parabolic_polish(objective, best, GOLDEN_RTOL, log_lams[0], log_lams[-1])
    history.extend(polished)

    lam = math.exp(best[0])
    a, c, ss_exp = _linear_part(s, y, lam)
    return DecayFit(
        a_star=a,
        lambda_star=lam,
        c_star=c,
        rms_residual=math.sqrt(ss_exp / n),
        n_samples=n,
        window=window,
        degenerate=False,
        p_value=_significance(ss_const, ss_exp, n, 2),
        curvature_p_value=_significance(_line_residual(s, y), ss_exp, n, 1),
        window_mean=mean,
        objective_trace=tuple(history),
    )


def fit_decay(trace: ResistanceTrace, window: FitWindow, pixel: Optional[int] = None) -> DecayFit:
    """Fit the aggregate (or one pixel's) series over the window"""
    series = trace.series(pixel)
    keep = (trace.times >= window.start - _TIME_EPS) & (trace.times <= window.end + _TIME_EPS)
    keep &= np.isfinite(series)
    return fit_arrays(trace.times[keep], series[keep], window)


def fit_pixels(trace: ResistanceTrace, t_actuation: Optional[float] = None, t_a: float = DEFAULT_T_A,
               t_c: float = DEFAULT_T_C) -> List[Optional[DecayFit]]:
    """One fit per pixel, each anchored on its own peak; None where a pixel cannot be fitted"""
    fits: List[Optional[DecayFit]] = []
    for pixel in range(trace.n_pixels):
        try:
            window = window_for(trace, t_actuation, t_a, t_c, pixel)
            fits.append(fit_decay(trace, window, pixel))
        except (EmptyWindow, InsufficientData) as e:
            logger.info("Pixel %d not fitted: %s", pixel, e)
            fits.append(None)
    return fits


def raw_reading(trace: ResistanceTrace, at_time: float, pixel: Optional[int] = None) -> float:
    """Recorded relative resistance at the sample nearest at_time"""
    value = float(trace.series(pixel)[trace.nearest_index(at_time)])
    if not math.isfinite(value):
        raise NoValidPixel(f"No valid reading at t={at_time}")
    return value


def settled_estimate(trace: ResistanceTrace, t_actuation: Optional[float] = None,
                     policy: str = SETTLE_FIT, t_a: float = DEFAULT_T_A, t_c: float = DEFAULT_T_C,
                     pixel: Optional[int] = None, peak_within: Optional[float] = None) -> float:
    """
    Settled relative resistance after an actuation.

    raw_at_tc reads the trace at t_actuation + t_c. decay_fit returns C* when
    the window holds a resolved transient (see DecayFit.is_significant) and
    the window mean otherwise.
    """
    if policy not in SETTLE_POLICIES:
        raise ValueError(f"Unknown settle policy '{policy}'")
    if t_actuation is None:
        t_actuation = trace.last_mark("close_stop")
        if t_actuation is None:
            raise EmptyWindow("Trace has no close_stop mark to anchor the estimate")
    if policy == SETTLE_RAW:
        return raw_reading(trace, t_actuation + t_c, pixel)

    fit = fit_decay(trace, window_for(trace, t_actuation, t_a, t_c, pixel, peak_within), pixel)
    if fit.is_significant():
        return fit.c_star
    logger.debug("Transient not resolved (p=%.3g, curvature p=%.3g); using window mean",
                 fit.p_value, fit.curvature_p_value)
    return fit.window_mean


def settled_error(estimate: float, reference_settled: float) -> float:
    return abs(estimate - reference_settled)
