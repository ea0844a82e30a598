"""
Tactile Toolkit - Sensor data model
Raw ADC frames, voltage-divider conversion, baseline normalization and pixel aggregation
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import (
    EmptyCapture,
    FormatError,
    InvalidBaseline,
    NoValidPixel,
    OrderError,
    RangeError,
    RebaselineError,
    SaturationError,
    ShapeError,
    TraceRangeError,
)

logger = logging.getLogger(__name__)

ADC_MAX = 1023
N_QUIET = 15
MARK_KINDS = ("close_start", "close_stop", "open_start", "open_stop")

Mark = Tuple[float, str]


@dataclass(frozen=True)
class DividerConfig:
    """
    Voltage divider feeding the ADC.

    The fixed resistor sits on the measured leg and the sensor on the
    reference leg, so pressure (lower sensor resistance) raises V_out:
    V_out = v_ref * r_fixed / (r_fixed + r_sensor).
    """

    v_ref: float = 5.0
    r_fixed: float = 4700.0

    def __post_init__(self):
        if not (self.v_ref > 0 and self.r_fixed > 0):
            raise ValueError(f"Divider needs v_ref > 0 and r_fixed > 0, got {self.v_ref}, {self.r_fixed}")


@dataclass(frozen=True)
class SensorFrame:
    """One time-stamped grid of ADC samples from a finger's sensor array (row-major)"""

    timestamp: float
    rows: int
    cols: int
    adc_counts: Tuple[float, ...]
    finger_id: str = "0"

    def __post_init__(self):
        object.__setattr__(self, "adc_counts", tuple(self.adc_counts))
        if self.rows < 1 or self.cols < 1:
            raise ShapeError(f"Grid must be at least 1x1, got {self.rows}x{self.cols}")
        if len(self.adc_counts) != self.rows * self.cols:
            raise ShapeError(
                f"Frame at t={self.timestamp} has {len(self.adc_counts)} counts for a "
                f"{self.rows}x{self.cols} grid"
            )
        for count in self.adc_counts:
            if not (math.isfinite(count) and 0 <= count <= ADC_MAX):
                raise RangeError(f"ADC count {count} outside [0, {ADC_MAX}]")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True)
class PixelBaseline:
    """Resting resistance R_avg per pixel (ohms, row-major)"""

    rows: int
    cols: int
    r_avg: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "r_avg", tuple(float(r) for r in self.r_avg))
        if len(self.r_avg) != self.rows * self.cols:
            raise ShapeError(f"Baseline has {len(self.r_avg)} values for a {self.rows}x{self.cols} grid")
        if not all(math.isfinite(r) and r > 0 for r in self.r_avg):
            raise InvalidBaseline("Every baseline resistance must be finite and > 0")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def values(self) -> np.ndarray:
        return np.array(self.r_avg, dtype=float)


@dataclass(frozen=True, eq=False)
class ResistanceTrace:
    """
    Relative-resistance time series for one capture.

    per_pixel_rel has shape (n_pixels, n_samples) with NaN marking missing
    samples; aggregate_rel is the mean over the valid pixels of each sample.
    """

    times: np.ndarray
    per_pixel_rel: np.ndarray
    aggregate_rel: np.ndarray
    actuation_marks: Tuple[Mark, ...] = ()
    rows: int = 1
    cols: int = 1

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        per_pixel = np.array(self.per_pixel_rel, dtype=float)
        aggregate = np.array(self.aggregate_rel, dtype=float)
        if per_pixel.ndim != 2 or per_pixel.shape != (self.rows * self.cols, times.size):
            raise ShapeError(
                f"per_pixel_rel shape {per_pixel.shape} does not match "
                f"{self.rows * self.cols} pixels x {times.size} samples"
            )
        if aggregate.shape != times.shape:
            raise ShapeError("aggregate_rel must have one value per sample")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise OrderError("Trace times must be strictly increasing")
        for arr in (times, per_pixel, aggregate):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "per_pixel_rel", per_pixel)
        object.__setattr__(self, "aggregate_rel", aggregate)
        object.__setattr__(self, "actuation_marks", validate_marks(self.actuation_marks))

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if self.n_samples else 0.0

    def series(self, pixel: Optional[int] = None) -> np.ndarray:
        """Aggregate series, or one pixel's series when pixel is given"""
        if pixel is None:
            return self.aggregate_rel
        if not 0 <= pixel < self.n_pixels:
            raise ShapeError(f"Pixel {pixel} outside a {self.rows}x{self.cols} grid")
        return self.per_pixel_rel[pixel]

    def nearest_index(self, at_time: float) -> int:
        """Index of the sample nearest to at_time (earlier sample on exact ties)"""
        if self.n_samples == 0:
            raise TraceRangeError("Trace has no samples")
        tol = 0.5 * float(np.median(np.diff(self.times))) if self.n_samples > 1 else 0.0
        if at_time < self.times[0] - tol or at_time > self.times[-1] + tol:
            raise TraceRangeError(
                f"t={at_time} outside trace range [{self.times[0]}, {self.times[-1]}]"
            )
        right = int(np.searchsorted(self.times, at_time))
        if right <= 0:
            return 0
        if right >= self.n_samples:
            return self.n_samples - 1
        left = right - 1
        if at_time - self.times[left] <= self.times[right] - at_time:
            return left
        return right

    def mark_times(self, kind: str) -> Tuple[float, ...]:
        return tuple(t for t, k in self.actuation_marks if k == kind)

    def last_mark(self, kind: str) -> Optional[float]:
        times = self.mark_times(kind)
        return times[-1] if times else None

    def window(self, t_start: float, t_end: float) -> "ResistanceTrace":
        """Samples and marks with t_start <= t < t_end"""
        keep = (self.times >= t_start) & (self.times < t_end)
        marks = tuple(m for m in self.actuation_marks if t_start <= m[0] < t_end)
        return ResistanceTrace(
            times=self.times[keep],
            per_pixel_rel=self.per_pixel_rel[:, keep],
            aggregate_rel=self.aggregate_rel[keep],
            actuation_marks=marks,
            rows=self.rows,
            cols=self.cols,
        )


def validate_marks(marks: Iterable[Mark]) -> Tuple[Mark, ...]:
    """Normalize marks to (float, kind) tuples; kinds known and times sorted"""
    checked = []
    for t, kind in marks:
        if kind not in MARK_KINDS:
            raise FormatError(f"Unknown actuation mark kind '{kind}'")
        checked.append((float(t), kind))
    for (t0, _), (t1, _) in zip(checked, checked[1:]):
        if t1 < t0:
            raise OrderError(f"Actuation marks not sorted by time ({t1} after {t0})")
    return tuple(checked)


def adc_to_resistance(count: float, cfg: DividerConfig = DividerConfig()) -> float:
    """
    Convert one ADC count to sensor resistance in ohms.

    V_out = v_ref * count / 1023 and R = r_fixed * (v_ref / V_out - 1).
    A count of 1023 means the sensor leg is shorted: 0 ohm is returned
    with a warning. A count of 0 cannot be converted.
    """
    if not (math.isfinite(count) and 0 <= count <= ADC_MAX):
        raise RangeError(f"ADC count {count} outside [0, {ADC_MAX}]")
    if count == 0:
        raise SaturationError("ADC count 0: sensor resistance too high to measure")
    if count == ADC_MAX:
        logger.warning("ADC count %d: sensor leg shorted, reporting 0 ohm", ADC_MAX)
        return 0.0
    v_out = cfg.v_ref * count / ADC_MAX
    return cfg.r_fixed * (cfg.v_ref / v_out - 1.0)


def resistance_to_adc(resistance: float, cfg: DividerConfig = DividerConfig(), quantize: bool = True) -> float:
    """Inverse of adc_to_resistance; resistances <= 0 read as a full-scale count"""
    if resistance <= 0:
        return float(ADC_MAX)
    count = ADC_MAX * cfg.r_fixed / (resistance + cfg.r_fixed)
    if quantize:
        count = math.floor(count + 0.5)
    return float(min(max(count, 0.0), ADC_MAX))


def counts_to_resistance(counts: np.ndarray, cfg: DividerConfig = DividerConfig()) -> np.ndarray:
    """Vectorized conversion; open (0) and shorted (1023) counts become NaN"""
    counts = np.asarray(counts, dtype=float)
    valid = (counts > 0) & (counts < ADC_MAX)
    safe = np.where(valid, counts, 1.0)
    resistance = cfg.r_fixed * (ADC_MAX / safe - 1.0)
    return np.where(valid, resistance, np.nan)


def normalize(resistance, baseline):
    """Relative resistance in percent: (R / R_avg - 1) * 100"""
    base = np.asarray(baseline, dtype=float)
    if np.any(~(base > 0)):
        raise InvalidBaseline(f"Baseline must be > 0, got {baseline}")
    rel = (np.asarray(resistance, dtype=float) / base - 1.0) * 100.0
    if np.ndim(rel) == 0:
        return float(rel)
    return rel


def aggregate_pixels(per_pixel_rel: np.ndarray) -> np.ndarray:
    """Per-sample mean over valid pixels; NaN where every pixel is missing"""
    per_pixel_rel = np.asarray(per_pixel_rel, dtype=float)
    valid = np.isfinite(per_pixel_rel)
    counts = valid.sum(axis=0)
    sums = np.where(valid, per_pixel_rel, 0.0).sum(axis=0)
    out = np.full(per_pixel_rel.shape[1], np.nan)
    np.divide(sums, counts, out=out, where=counts > 0)
    return out


def build_trace(
    frames: Sequence[SensorFrame],
    baseline: PixelBaseline,
    cfg: DividerConfig = DividerConfig(),
    marks: Iterable[Mark] = (),
) -> ResistanceTrace:
    """Normalize a capture against its baseline and aggregate the pixels"""
    if not frames:
        raise EmptyCapture("No frames in capture")
    for frame in frames:
        if frame.shape != baseline.shape:
            raise ShapeError(
                f"Frame at t={frame.timestamp} is {frame.rows}x{frame.cols}, "
                f"baseline is {baseline.rows}x{baseline.cols}"
            )
    times = np.array([f.timestamp for f in frames], dtype=float)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        bad = int(np.argmax(np.diff(times) <= 0)) + 1
        raise OrderError(f"Frame timestamps not strictly increasing at frame {bad}")

    counts = np.array([f.adc_counts for f in frames], dtype=float)
    resistance = counts_to_resistance(counts, cfg)
    missing = int(np.isnan(resistance).sum())
    if missing:
        logger.warning("%d pixel samples saturated or shorted; excluded from aggregates", missing)
    per_pixel = ((resistance / baseline.values - 1.0) * 100.0).T

    return ResistanceTrace(
        times=times,
        per_pixel_rel=per_pixel,
        aggregate_rel=aggregate_pixels(per_pixel),
        actuation_marks=tuple(marks),
        rows=baseline.rows,
        cols=baseline.cols,
    )


def rebaseline(baseline: PixelBaseline, cycle_start_frame: SensorFrame,
               cfg: DividerConfig = DividerConfig()) -> PixelBaseline:
    """
    Take a pressure-free frame's resistances as the new baseline.

    Saturated or shorted pixels keep their previous baseline; in that case
    RebaselineError is raised carrying the partially updated baseline.
    """
    if cycle_start_frame.shape != baseline.shape:
        raise ShapeError("Rebaseline frame does not match the baseline grid")
    fresh = counts_to_resistance(np.array(cycle_start_frame.adc_counts), cfg)
    bad = ~np.isfinite(fresh)
    updated = PixelBaseline(baseline.rows, baseline.cols, tuple(np.where(bad, baseline.values, fresh)))
    if bad.any():
        pixels = tuple(int(i) for i in np.flatnonzero(bad))
        logger.warning("Rebaseline kept previous values for saturated pixels %s", pixels)
        raise RebaselineError(f"Pixels {pixels} saturated in rebaseline frame", pixels, updated)
    return updated


def capture_baseline(frames: Sequence[SensorFrame], cfg: DividerConfig = DividerConfig(),
                     n_quiet: int = N_QUIET) -> PixelBaseline:
    """Mean resistance per pixel over the first n_quiet pressure-free frames"""
    if not frames:
        raise EmptyCapture("No frames for baseline capture")
    quiet = frames[:n_quiet]
    if len(quiet) < n_quiet:
        logger.info("Baseline from %d frames (asked for %d)", len(quiet), n_quiet)
    rows, cols = quiet[0].shape
    if any(f.shape != (rows, cols) for f in quiet):
        raise ShapeError("Baseline frames have inconsistent grid shapes")
    resistance = counts_to_resistance(np.array([f.adc_counts for f in quiet]), cfg)
    valid = np.isfinite(resistance)
    n_valid = valid.sum(axis=0)
    if np.any(n_valid == 0):
        pixels = tuple(int(i) for i in np.flatnonzero(n_valid == 0))
        raise RebaselineError(f"Pixels {pixels} saturated in every baseline frame", pixels)
    mean = np.where(valid, resistance, 0.0).sum(axis=0) / n_valid
    return PixelBaseline(rows, cols, tuple(mean))


def min_pixel_rel(trace: ResistanceTrace, at_time: float) -> Tuple[int, float]:
    """Most negative pixel (row-major first on ties) at the sample nearest at_time"""
    column = trace.per_pixel_rel[:, trace.nearest_index(at_time)]
    if not np.isfinite(column).any():
        raise NoValidPixel(f"All pixels missing at t={at_time}")
    index = int(np.nanargmin(column))
    return index, float(column[index])


def split_windows(trace: ResistanceTrace, window_s: float = 1.0) -> List[ResistanceTrace]:
    """Cut a trace into consecutive fixed-length windows (empty windows skipped)"""
    if window_s <= 0:
        raise ValueError("window_s must be > 0")
    windows = []
    if trace.n_samples == 0:
        return windows
    start = float(trace.times[0])
    n_windows = int(math.floor(trace.duration / window_s)) + 1
    for k in range(n_windows):
        piece = trace.window(start + k * window_s, start + (k + 1) * window_s)
        if piece.n_samples:
            windows.append(piece)
    return windows
