"""
Tactile Toolkit - Sensor Simulator
Deterministic object / gripper / sensor physics producing frame logs with
ground truth, plus the cutoff-sweep and force-benchmark experiments

Physics per pixel:
    compression x = max(0, diameter - width), force F = stiffness * x
    settled C = settled_slope * F + settled_intercept on contacting pixels (0 elsewhere)
    after each width command at t_s: v(t) = C + A * exp(-lam * (t - t_s)),
    A = spike_gain * F + (excess still decaying from the previous command)
Noise is Gaussian on relative resistance, drawn from a SplitMix64 stream
(Box-Muller, cosine branch), so seeds reproduce across platforms.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from calibration import (
    PUBLISHED_FORCE_MODELS,
    PUBLISHED_PAD_MEANS,
    LinearModel,
    estimate_force,
)
from decay_fitter import DEFAULT_T_A, fit_decay, raw_reading, settled_error, window_for
from errors import EmptySchedule, NumericalError, OrderError, ProfileParseError, RebaselineError
from section_file import fmt_float, fmt_floats, format_sections, read_sections, write_atomic
from sensor_model import (
    ADC_MAX,
    N_QUIET,
    DividerConfig,
    Mark,
    PixelBaseline,
    ResistanceTrace,
    SensorFrame,
    build_trace,
    capture_baseline,
    rebaseline,
)

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.179
DEFAULT_SPIKE_GAIN = 2.0
DEFAULT_NOISE_SIGMA = 0.05
PIXEL_PITCH_MM = 8.0
DEFAULT_TAIL_S = 20.0
DEFAULT_W_MAX = 80.0

PAD_THICKNESS_MM = 10.0
DEFAULT_COMPRESSIONS = (2.0, 2.75, 3.5, 4.25, 5.0)
DEFAULT_REPEATS = 10
DEFAULT_CUTOFFS = (1.0, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 15.0, 20.0)
BENCH_TECHNIQUES = ("raw@2.5s", "raw@10s", "raw@20s", "exponential@2.5s")
CLOSE_AT_S = 2.0

REFERENCE_TRUTH = "truth"
REFERENCE_RECORDED = "recorded"

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, key: str) -> int:
    """Child seed for a named sub-stream: mix64(root XOR fnv1a64(key))"""
    h = 0xCBF29CE484222325
    for byte in key.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return _mix64((root & _MASK64) ^ h)


class SplitMix64:
    """SplitMix64 stream: state += golden gamma, output = mix64(state)"""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN64) & _MASK64
        return _mix64(self.state)

    def u64_block(self, n: int) -> np.ndarray:
        z = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN64) + np.uint64(self.state)
        self.state = (self.state + n * _GOLDEN64) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) from the top 53 bits"""
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def normals(self, n: int) -> np.ndarray:
        u = self.uniforms(2 * n)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        return radius * np.cos(2.0 * math.pi * u[1::2])


@dataclass(frozen=True)
class SimObject:
    """Linear-spring object; a None mask means every pixel touches it"""

    diameter: float
    stiffness: float
    per_pixel_contact_mask: Optional[Tuple[bool, ...]] = None

    def __post_init__(self):
        if not (self.diameter > 0 and self.stiffness > 0):
            raise ValueError("Object diameter and stiffness must be > 0")
        if self.per_pixel_contact_mask is not None:
            mask = tuple(bool(m) for m in self.per_pixel_contact_mask)
            if not any(mask):
                raise ValueError("Contact mask must include at least one pixel")
            object.__setattr__(self, "per_pixel_contact_mask", mask)

    @classmethod
    def sphere(cls, diameter: float, stiffness: float, rows: int = 2, cols: int = 2,
               pitch_mm: float = PIXEL_PITCH_MM) -> "SimObject":
        """Round object centred on the array: pixels whose centre lies inside its outline touch"""
        ys = (np.arange(rows) - (rows - 1) / 2.0) * pitch_mm
        xs = (np.arange(cols) - (cols - 1) / 2.0) * pitch_mm
        dist = np.hypot(ys[:, None], xs[None, :]).ravel()
        mask = dist <= diameter / 2.0
        if not mask.any():
            mask = dist == dist.min()
        return cls(diameter, stiffness, tuple(bool(m) for m in mask))

    def mask(self, n_pixels: int) -> np.ndarray:
        if self.per_pixel_contact_mask is None:
            return np.ones(n_pixels, dtype=bool)
        if len(self.per_pixel_contact_mask) != n_pixels:
            raise ValueError(f"Contact mask has {len(self.per_pixel_contact_mask)} entries for {n_pixels} pixels")
        return np.array(self.per_pixel_contact_mask, dtype=bool)

    def force_at(self, width: float) -> float:
        return self.stiffness * max(0.0, self.diameter - width)


@dataclass(frozen=True)
class SimSensorParams:
    lam: float = DEFAULT_LAMBDA
    spike_gain: float = DEFAULT_SPIKE_GAIN
    settled_slope: float = -1.0 / 0.129
    settled_intercept: float = 0.0
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    quantize_10bit: bool = False
    sample_rate: float = 15.0
    drift_rate: float = 0.0
    rows: int = 2
    cols: int = 2
    base_resistance: float = 4700.0
    base_spread: float = 0.05
    divider: DividerConfig = DividerConfig()

    def __post_init__(self):
        if not (self.lam > 0 and self.sample_rate > 0 and self.noise_sigma >= 0):
            raise ValueError("Need lam > 0, sample_rate > 0 and noise_sigma >= 0")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("Sensor grid must be at least 1x1")
        if not (self.base_resistance > 0 and 0 <= self.base_spread < 1):
            raise ValueError("Need base_resistance > 0 and base_spread in [0, 1)")

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    @classmethod
    def from_force_model(cls, model: LinearModel, **overrides) -> "SimSensorParams":
        """Settled line that inverts a force model: C = (F - intercept) / slope"""
        return cls(settled_slope=1.0 / model.slope, settled_intercept=-model.intercept / model.slope, **overrides)

    def settled_for(self, force: float) -> float:
        if force <= 0:
            return 0.0
        return self.settled_slope * force + self.settled_intercept

    def with_(self, **changes) -> "SimSensorParams":
        return replace(self, **changes)


# 10-bit capture at 0.5 % noise with a spike large enough to stand above it
NOISY_PARAMS = SimSensorParams(spike_gain=15.0, noise_sigma=0.5, quantize_10bit=True)


@dataclass(frozen=True)
class TruthRow:
    """State right after one width command (aggregate values are pixel means)"""

    t_s: float
    width_mm: float
    force_n: float
    c_true: float
    a_true: float


@dataclass(frozen=True)
class SimScenario:
    obj: Optional[SimObject]
    width_schedule: Tuple[Tuple[float, float], ...]
    params: SimSensorParams = SimSensorParams()
    duration: Optional[float] = None


class _SensorRig:
    """Pixel dynamics plus the ADC chain shared by simulate_grasp and SimulatedGripper"""

    def __init__(self, obj: Optional[SimObject], params: SimSensorParams, seed: int,
                 initial_width: float, cycle: int = 0):
        self.obj = obj
        self.params = params
        n = params.n_pixels
        spread = SplitMix64(derive_seed(seed, "base")).uniforms(n)
        drift = 1.0 + params.drift_rate / 100.0 * cycle / 1000.0
        self.base = params.base_resistance * (1.0 + params.base_spread * (2.0 * spread - 1.0)) * drift
        self._noise = SplitMix64(derive_seed(seed, f"noise/{cycle}"))
        self._mask = obj.mask(n) if obj is not None else np.zeros(n, dtype=bool)

        self.width = initial_width
        self._settled = self._settled_pixels(self.force())
        self._excess = np.zeros(n)
        self._t_start = 0.0
        self.truth: List[TruthRow] = [self._truth_row(0.0)]

    def force(self, width: Optional[float] = None) -> float:
        if self.obj is None:
            return 0.0
        return self.obj.force_at(self.width if width is None else width)

    def _settled_pixels(self, force: float) -> np.ndarray:
        return np.where(self._mask, self.params.settled_for(force), 0.0)

    def _truth_row(self, t: float) -> TruthRow:
        return TruthRow(t, self.width, self.force(), float(self._settled.mean()), float(self._excess.mean()))

    def values(self, times: np.ndarray) -> np.ndarray:
        """Noiseless relative resistance, shape (len(times), n_pixels)"""
        decay = np.exp(-self.params.lam * (np.asarray(times, dtype=float)[:, None] - self._t_start))
        return self._settled[None, :] + self._excess[None, :] * decay

    def command(self, t: float, width: float) -> List[Mark]:
        previous = self.width
        carry = self.values(np.array([t]))[0] - self._settled
        self.width = width
        force = self.force()
        spike = np.where(self._mask & (force > 0), self.params.spike_gain * force, 0.0)
        self._settled = self._settled_pixels(force)
        self._excess = spike + carry
        self._t_start = t
        self.truth.append(self._truth_row(t))
        if width < previous:
            return [(t, "close_start"), (t, "close_stop")]
        if width > previous:
            return [(t, "open_start"), (t, "open_stop")]
        return []

    def render(self, times: np.ndarray) -> List[SensorFrame]:
        times = np.asarray(times, dtype=float)
        rel = self.values(times)
        if self.params.noise_sigma > 0:
            rel = rel + self.params.noise_sigma * self._noise.normals(rel.size).reshape(rel.shape)
        resistance = self.base[None, :] * (1.0 + rel / 100.0)
        r_fixed = self.params.divider.r_fixed
        counts = np.where(resistance > 0, ADC_MAX * r_fixed / (np.maximum(resistance, 0.0) + r_fixed), ADC_MAX)
        if self.params.quantize_10bit:
            counts = np.floor(counts + 0.5)
        counts = np.clip(counts, 0.0, ADC_MAX)
        rows, cols = self.params.rows, self.params.cols
        return [SensorFrame(float(t), rows, cols, tuple(float(c) for c in row), "0") for t, row in zip(times, counts)]


@dataclass(frozen=True, eq=False)
class SimResult:
    frames: Tuple[SensorFrame, ...]
    marks: Tuple[Mark, ...]
    truth: Tuple[TruthRow, ...]
    base_resistance: Tuple[float, ...]
    params: SimSensorParams

    def true_baseline(self) -> PixelBaseline:
        return PixelBaseline(self.params.rows, self.params.cols, self.base_resistance)

    def baseline(self, n_quiet: int = N_QUIET) -> PixelBaseline:
        return capture_baseline(self.frames, self.params.divider, n_quiet)

    def trace(self, baseline: Optional[PixelBaseline] = None) -> ResistanceTrace:
        """Trace normalized against the captured quiet-frame baseline (or the one given)"""
        return build_trace(self.frames, baseline or self.baseline(), self.params.divider, self.marks)

    @property
    def final_truth(self) -> TruthRow:
        return self.truth[-1]


def _frame_times(n_frames: int, sample_rate: float, first_index: int = 0) -> np.ndarray:
    return np.arange(first_index, first_index + n_frames, dtype=float) / sample_rate


def simulate_grasp(obj: Optional[SimObject], width_schedule: Sequence[Tuple[float, float]],
                   params: SimSensorParams = SimSensorParams(), seed: int = 0,
                   duration: Optional[float] = None, cycle: int = 0) -> SimResult:
    """
    Simulate one capture. The first schedule entry is the steady starting
    width; every later entry is an instantaneous width command.
    """
    schedule = [(float(t), float(w)) for t, w in width_schedule]
    if not schedule:
        raise EmptySchedule("Width schedule is empty")
    for (t0, _), (t1, _) in zip(schedule, schedule[1:]):
        if t1 <= t0:
            raise OrderError(f"Width schedule times not increasing ({t1} after {t0})")
    if any(w < 0 for _, w in schedule) or schedule[0][0] < 0:
        raise ValueError("Schedule widths and times must be >= 0")
    if duration is None:
        duration = schedule[-1][0] + DEFAULT_TAIL_S

    rig = _SensorRig(obj, params, seed, schedule[0][1], cycle)
    times = _frame_times(int(math.floor(duration * params.sample_rate + 1e-9)) + 1, params.sample_rate)
    frames: List[SensorFrame] = []
    marks: List[Mark] = []
    edges = [t for t, _ in schedule[1:]] + [math.inf]
    start = 0
    for (t_cmd, width), t_next in zip([(None, None)] + schedule[1:], edges):
        if t_cmd is not None:
            marks.extend(rig.command(t_cmd, width))
        stop = int(np.searchsorted(times, t_next - 1e-9))
        frames.extend(rig.render(times[start:stop]))
        start = stop
    return SimResult(tuple(frames), tuple(marks), tuple(rig.truth), tuple(rig.base), params)


def simulate_scenario(scenario: SimScenario, seed: int) -> SimResult:
    return simulate_grasp(scenario.obj, scenario.width_schedule, scenario.params, seed, scenario.duration)


class SimulatedGripper:
    """
    Width-controlled gripper over the simulated sensor.

    The clock runs in whole frames; construction captures the quiet frames
    used as the baseline for every later capture.
    """

    def __init__(self, obj: Optional[SimObject], params: SimSensorParams = SimSensorParams(), seed: int = 0,
                 w_max: float = DEFAULT_W_MAX, w_min: float = 0.0):
        if not w_max > w_min >= 0:
            raise ValueError("Need w_max > w_min >= 0")
        self.params = params
        self.w_min = w_min
        self.w_max = w_max
        self._rig = _SensorRig(obj, params, seed, w_max)
        self._frame_index = 0
        self.frames: List[SensorFrame] = []
        self.marks: List[Mark] = []
        quiet = self._render(N_QUIET)
        self.baseline = capture_baseline(quiet, params.divider)

    @property
    def clock(self) -> float:
        return self._frame_index / self.params.sample_rate

    @property
    def truth(self) -> Tuple[TruthRow, ...]:
        return tuple(self._rig.truth)

    def true_force(self) -> float:
        return self._rig.force()

    def _render(self, n_frames: int) -> List[SensorFrame]:
        frames = self._rig.render(_frame_times(n_frames, self.params.sample_rate, self._frame_index))
        self._frame_index += n_frames
        self.frames.extend(frames)
        return frames

    def set_width(self, width: float) -> float:
        achieved = min(max(width, self.w_min), self.w_max)
        self.marks.extend(self._rig.command(self.clock, achieved))
        return achieved

    def current_width(self) -> float:
        return self._rig.width

    def capture(self, duration: float) -> ResistanceTrace:
        t0 = self.clock
        frames = self._render(int(round(duration * self.params.sample_rate)) + 1)
        marks = [m for m in self.marks if t0 - 1e-9 <= m[0] <= frames[-1].timestamp]
        return build_trace(frames, self.baseline, self.params.divider, marks)


@dataclass(frozen=True)
class DriftReport:
    cycle_index: Tuple[int, ...]
    rebaselined: Tuple[float, ...]
    fixed_baseline: Tuple[float, ...]
    rebaseline_failures: int = 0


def run_drift_scenario(obj: SimObject, params: SimSensorParams, n_cycles: int, seed: int,
                       cycle_stride: int = 1, grasp_width: Optional[float] = None,
                       cycle_s: float = 6.0) -> DriftReport:
    """
    Repeated grasp / release cycles on a drifting sensor.

    Returns each cycle's start-of-cycle aggregate normalized two ways: against
    a baseline refreshed from that cycle's first frame, and against the
    baseline captured before the first cycle.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    open_width = obj.diameter + 5.0
    width = obj.diameter - 2.0 if grasp_width is None else grasp_width
    schedule = [(0.0, open_width), (cycle_s / 3.0, width), (2.0 * cycle_s / 3.0, open_width)]

    fixed = None
    rolling = None
    failures = 0
    indices, rebased, drifted = [], [], []
    for k in range(n_cycles):
        cycle = k * cycle_stride
        result = simulate_grasp(obj, schedule, params, seed, cycle_s, cycle)
        first = result.frames[0]
        if fixed is None:
            fixed = result.baseline()
            rolling = fixed
        try:
            rolling = rebaseline(rolling, first, params.divider)
        except RebaselineError as e:
            failures += 1
            logger.warning("Cycle %d rebaseline incomplete: %s", cycle, e)
            rolling = e.baseline or rolling
        indices.append(cycle)
        rebased.append(float(build_trace([first], rolling, params.divider).aggregate_rel[0]))
        drifted.append(float(build_trace([first], fixed, params.divider).aggregate_rel[0]))
    return DriftReport(tuple(indices), tuple(rebased), tuple(drifted), failures)


@dataclass(frozen=True)
class BenchMaterial:
    """A pad material: its force line and the spring stiffness of the pad"""

    name: str
    force_model: LinearModel
    stiffness: float


def published_materials(reference_compression: float = 5.0) -> Tuple[BenchMaterial, ...]:
    """Published pads, stiffness chosen so reference_compression reproduces each pad's settled mean"""
    materials = []
    for name, mean in PUBLISHED_PAD_MEANS.items():
        model = PUBLISHED_FORCE_MODELS[name]
        materials.append(BenchMaterial(name, model, model.evaluate(mean) / reference_compression))
    return tuple(materials)


@dataclass(frozen=True)
class CorpusSpec:
    materials: Tuple[BenchMaterial, ...] = field(default_factory=published_materials)
    compressions: Tuple[float, ...] = DEFAULT_COMPRESSIONS
    repeats: int = DEFAULT_REPEATS
    pad_thickness: float = PAD_THICKNESS_MM

    def __post_init__(self):
        if not self.materials or not self.compressions or self.repeats < 1:
            raise ValueError("Corpus needs materials, compressions and at least one repeat")

    @property
    def size(self) -> int:
        return len(self.materials) * len(self.compressions) * self.repeats


@dataclass(frozen=True)
class _Dataset:
    material: BenchMaterial
    compression: float
    trace: ResistanceTrace
    truth: TruthRow


def _corpus(spec: CorpusSpec, params: SimSensorParams, seed: int, duration_after: float) -> Iterable[_Dataset]:
    open_width = spec.pad_thickness + 5.0
    for material in spec.materials:
        material_params = replace(
            params,
            settled_slope=1.0 / material.force_model.slope,
            settled_intercept=-material.force_model.intercept / material.force_model.slope,
        )
        pad = SimObject(spec.pad_thickness, material.stiffness)
        for compression in spec.compressions:
            schedule = [(0.0, open_width), (CLOSE_AT_S, spec.pad_thickness - compression)]
            for repeat in range(spec.repeats):
                dataset_seed = derive_seed(seed, f"{material.name}/{compression!r}/{repeat}")
                result = simulate_grasp(pad, schedule, material_params, dataset_seed, CLOSE_AT_S + duration_after)
                yield _Dataset(material, compression, result.trace(), result.final_truth)


@dataclass(frozen=True)
class SweepRow:
    cutoff_s: float
    exponential_error: float
    recorded_error: float
    reduction: float
    n_ok: int
    n_failed: int


def run_cutoff_sweep(spec: CorpusSpec = CorpusSpec(), cutoffs: Sequence[float] = DEFAULT_CUTOFFS,
                     params: SimSensorParams = SimSensorParams(), seed: int = 0,
                     reference: str = REFERENCE_TRUTH, t_a: float = DEFAULT_T_A) -> List[SweepRow]:
    """
    Median |C* - reference| and |raw(t_c) - reference| per cutoff.

    reference "truth" uses the simulator's settled value; "recorded" uses the
    raw reading at the longest cutoff. Failed fits are excluded and counted.
    """
    if reference not in (REFERENCE_TRUTH, REFERENCE_RECORDED):
        raise ValueError(f"Unknown reference '{reference}'")
    cutoffs = sorted(float(c) for c in cutoffs)
    if not cutoffs:
        raise ValueError("No cutoffs given")
    longest = cutoffs[-1]
    fit_errors: Dict[float, List[float]] = {c: [] for c in cutoffs}
    raw_errors: Dict[float, List[float]] = {c: [] for c in cutoffs}
    failed: Dict[float, int] = {c: 0 for c in cutoffs}

    for data in _corpus(spec, params, seed, longest + 1.0):
        t_act = data.trace.last_mark("close_stop")
        if reference == REFERENCE_TRUTH:
            ref = data.truth.c_true
        else:
            ref = raw_reading(data.trace, t_act + longest)
        for cutoff in cutoffs:
            raw_errors[cutoff].append(settled_error(raw_reading(data.trace, t_act + cutoff), ref))
            try:
                fit = fit_decay(data.trace, window_for(data.trace, t_act, t_a, cutoff))
            except NumericalError as e:
                logger.info("Fit excluded (%s, %.3g mm, t_c=%g): %s", data.material.name, data.compression, cutoff, e)
                failed[cutoff] += 1
                continue
            fit_errors[cutoff].append(settled_error(fit.c_star, ref))

    rows = []
    for cutoff in cutoffs:
        fit_med = float(np.median(fit_errors[cutoff])) if fit_errors[cutoff] else math.nan
        raw_med = float(np.median(raw_errors[cutoff])) if raw_errors[cutoff] else math.nan
        reduction = 1.0 - fit_med / raw_med if raw_med > 0 else math.nan
        rows.append(SweepRow(cutoff, fit_med, raw_med, reduction, len(fit_errors[cutoff]), failed[cutoff]))
    return rows


@dataclass(frozen=True)
class BenchRow:
    technique: str
    mean_abs_error_n: float
    mean_percent_error: float
    n_ok: int
    n_failed: int


def run_force_benchmark(spec: CorpusSpec = CorpusSpec(), params: SimSensorParams = SimSensorParams(),
                        seed: int = 0, t_a: float = DEFAULT_T_A) -> List[BenchRow]:
    """Force error of raw readings at 2.5, 10 and 20 s against the exponential fit at 2.5 s"""
    errors: Dict[str, List[Tuple[float, float]]] = {name: [] for name in BENCH_TECHNIQUES}
    failed = {name: 0 for name in BENCH_TECHNIQUES}

    for data in _corpus(spec, params, seed, 21.0):
        t_act = data.trace.last_mark("close_stop")
        f_true = data.truth.force_n
        settled = {
            "raw@2.5s": raw_reading(data.trace, t_act + 2.5),
            "raw@10s": raw_reading(data.trace, t_act + 10.0),
            "raw@20s": raw_reading(data.trace, t_act + 20.0),
        }
        try:
            settled["exponential@2.5s"] = fit_decay(data.trace, window_for(data.trace, t_act, t_a, 2.5)).c_star
        except NumericalError as e:
            logger.info("Fit excluded (%s, %.3g mm): %s", data.material.name, data.compression, e)
            failed["exponential@2.5s"] += 1
        for name, value in settled.items():
            error = abs(estimate_force(value, data.material.force_model).value - f_true)
            errors[name].append((error, 100.0 * error / f_true))

    rows = []
    for name in BENCH_TECHNIQUES:
        values = np.array(errors[name]).reshape(-1, 2)
        mean_n, mean_pct = (values.mean(axis=0) if values.size else (math.nan, math.nan))
        rows.append(BenchRow(name, float(mean_n), float(mean_pct), len(errors[name]), failed[name]))
    return rows


# Scenario files

def save_scenario(scenario: SimScenario, path):
    p = scenario.params
    sections = []
    if scenario.obj is not None:
        entries = [("diameter", fmt_float(scenario.obj.diameter)), ("stiffness", fmt_float(scenario.obj.stiffness))]
        if scenario.obj.per_pixel_contact_mask is not None:
            entries.append(("contact_mask", ", ".join("1" if m else "0" for m in scenario.obj.per_pixel_contact_mask)))
        sections.append(("object", entries))
    sections.append(("sensor", [
        ("lam", fmt_float(p.lam)),
        ("spike_gain", fmt_float(p.spike_gain)),
        ("settled_slope", fmt_float(p.settled_slope)),
        ("settled_intercept", fmt_float(p.settled_intercept)),
        ("noise_sigma", fmt_float(p.noise_sigma)),
        ("quantize_10bit", "true" if p.quantize_10bit else "false"),
        ("sample_rate", fmt_float(p.sample_rate)),
        ("drift_rate", fmt_float(p.drift_rate)),
        ("rows", str(p.rows)),
        ("cols", str(p.cols)),
    ]))
    schedule = [("times", fmt_floats(t for t, _ in scenario.width_schedule)),
                ("widths", fmt_floats(w for _, w in scenario.width_schedule))]
    if scenario.duration is not None:
        schedule.append(("duration", fmt_float(scenario.duration)))
    sections.append(("schedule", schedule))
    write_atomic(path, format_sections(sections, header="tactile simulator scenario"))


def load_scenario(path) -> SimScenario:
    sections = read_sections(path)
    for name, section in sections.items():
        if name not in ("object", "sensor", "schedule"):
            raise ProfileParseError(f"Unknown section [{name}]", section.line)
    if "schedule" not in sections:
        raise ProfileParseError("Scenario has no [schedule] section")

    defaults = SimSensorParams()
    params = defaults
    if "sensor" in sections:
        s = sections["sensor"]
        try:
            params = SimSensorParams(
                lam=s.get_float("lam", defaults.lam),
                spike_gain=s.get_float("spike_gain", defaults.spike_gain),
                settled_slope=s.get_float("settled_slope", defaults.settled_slope),
                settled_intercept=s.get_float("settled_intercept", defaults.settled_intercept),
                noise_sigma=s.get_float("noise_sigma", defaults.noise_sigma),
                quantize_10bit=s.get_bool("quantize_10bit", defaults.quantize_10bit),
                sample_rate=s.get_float("sample_rate", defaults.sample_rate),
                drift_rate=s.get_float("drift_rate", defaults.drift_rate),
                rows=s.get_int("rows", defaults.rows),
                cols=s.get_int("cols", defaults.cols),
            )
        except ValueError as e:
            raise ProfileParseError(str(e), s.line) from None

    obj = None
    if "object" in sections:
        o = sections["object"]
        mask = None
        if "contact_mask" in o:
            mask = tuple(v != 0 for v in o.get_floats("contact_mask"))
        try:
            obj = SimObject(o.get_float("diameter"), o.get_float("stiffness"), mask)
            obj.mask(params.n_pixels)
        except ValueError as e:
            raise ProfileParseError(str(e), o.line) from None

    sch = sections["schedule"]
    times, widths = sch.get_floats("times"), sch.get_floats("widths")
    if len(times) != len(widths):
        raise ProfileParseError("times and widths differ in length", sch.raw("widths")[1], "widths")
    duration = sch.get_float("duration") if "duration" in sch else None
    return SimScenario(obj, tuple(zip(times, widths)), params, duration)
