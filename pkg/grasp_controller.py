"""
Tactile Toolkit - Grasp Controller
Contact detection, incremental size estimation, force-target grasping and
object presence monitoring on top of a width-controlled gripper
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Protocol, Tuple

import numpy as np

from calibration import UNIT_NEWTONS, LinearModel, estimate_force
from decay_fitter import DEFAULT_T_A, DEFAULT_T_C, SETTLE_FIT, SETTLE_POLICIES, FitWindow, settled_estimate
from errors import ForceUnreachable, NoDecision, NoObjectError, OvershootError, TactileError, UnitMismatch
from sensor_model import ResistanceTrace

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = -10.0
DEFAULT_DELTA_W = 1.0
DEFAULT_SECURE_EXTRA = 2.0
CAPTURE_MARGIN_S = 0.5
DEFAULT_PEAK_WITHIN = 1.0

SCOPE_AGGREGATE = "aggregate"
SCOPE_ANY_PIXEL = "any_pixel"

PRESENT = "present"
ABSENT = "absent"
REMOVED = "removed"

_WIDTH_EPS = 1e-9


@dataclass(frozen=True)
class ContactConfig:
    epsilon: float = DEFAULT_EPSILON
    scope: str = SCOPE_AGGREGATE
    settle_policy: str = SETTLE_FIT
    t_a: float = DEFAULT_T_A
    t_c: float = DEFAULT_T_C
    peak_within: float = DEFAULT_PEAK_WITHIN

    def __post_init__(self):
        if not self.epsilon < 0:
            raise ValueError(f"epsilon must be < 0, got {self.epsilon}")
        if self.scope not in (SCOPE_AGGREGATE, SCOPE_ANY_PIXEL):
            raise ValueError(f"Unknown contact scope '{self.scope}'")
        if self.settle_policy not in SETTLE_POLICIES:
            raise ValueError(f"Unknown settle policy '{self.settle_policy}'")
        if not self.peak_within > 0:
            raise ValueError(f"peak_within must be > 0, got {self.peak_within}")


@dataclass(frozen=True)
class SizeEstimationConfig:
    w_start: float
    w_min: float = 0.0
    delta_w: float = DEFAULT_DELTA_W
    contact: ContactConfig = ContactConfig()
    secure_extra: float = DEFAULT_SECURE_EXTRA

    def __post_init__(self):
        if not self.w_start > self.w_min >= 0:
            raise ValueError("Need w_start > w_min >= 0")
        if not self.delta_w > 0:
            raise ValueError("delta_w must be > 0")
        if self.secure_extra < 0:
            raise ValueError("secure_extra must be >= 0")

    @property
    def max_steps(self) -> int:
        return int(math.ceil((self.w_start - self.w_min) / self.delta_w - _WIDTH_EPS))


class GripperPort(Protocol):
    """Width-controlled gripper; set_width clamps to the mechanical range and reports the achieved width"""

    def set_width(self, width: float) -> float: ...

    def current_width(self) -> float: ...

    def capture(self, duration: float) -> ResistanceTrace: ...


@dataclass(frozen=True)
class ControlEvent:
    step: int
    width_mm: float
    c_star_pct: float
    force_n: float
    decision: str


@dataclass(frozen=True)
class PresenceUpdate:
    index: int
    t_start: float
    state: str
    settled: float
    event: Optional[str] = None


def contact_reading(trace: ResistanceTrace, cfg: ContactConfig, window: Optional[FitWindow] = None) -> float:
    """
    Settled estimate used for the contact decision: the aggregate, or the
    most negative pixel for any_pixel scope. The peak is searched only within
    peak_within of actuation. Failures surface as NoDecision.
    """
    if window is not None:
        t_act, t_a, t_c = window.t_actuation, window.t_a, window.t_c
    else:
        t_act, t_a, t_c = None, cfg.t_a, cfg.t_c
    try:
        if cfg.scope == SCOPE_AGGREGATE:
            return settled_estimate(trace, t_act, cfg.settle_policy, t_a, t_c, None, cfg.peak_within)
        readings = []
        for pixel in range(trace.n_pixels):
            try:
                readings.append(settled_estimate(trace, t_act, cfg.settle_policy, t_a, t_c, pixel, cfg.peak_within))
            except TactileError as e:
                logger.debug("Pixel %d has no settled estimate: %s", pixel, e)
        if not readings:
            raise NoDecision("No pixel produced a settled estimate")
        return min(readings)
    except NoDecision:
        raise
    except TactileError as e:
        raise NoDecision(f"No settled estimate: {e}") from e


def detect_contact(trace: ResistanceTrace, cfg: ContactConfig = ContactConfig(),
                   window: Optional[FitWindow] = None) -> bool:
    return contact_reading(trace, cfg, window) <= cfg.epsilon


class GraspController:
    """Drives one gripper through a grasp; every step is appended to events"""

    def __init__(self, gripper: GripperPort, cfg: SizeEstimationConfig):
        self.gripper = gripper
        self.cfg = cfg
        self.events: List[ControlEvent] = []

    def _log(self, width: float, c_star: float, force: float, decision: str):
        event = ControlEvent(len(self.events), width, c_star, force, decision)
        self.events.append(event)
        logger.debug("step %d: width=%.3f mm c*=%.4g%% F=%.4g N -> %s", event.step, width, c_star, force, decision)

    def _capture_reading(self) -> float:
        trace = self.gripper.capture(self.cfg.contact.t_c + CAPTURE_MARGIN_S)
        return contact_reading(trace, self.cfg.contact)

    def close_until_contact(self) -> Tuple[float, float]:
        """Step closed from w_start until contact; returns (commanded width, settled reading)"""
        cfg = self.cfg
        self.gripper.set_width(cfg.w_start)
        self.gripper.capture(cfg.contact.t_c + CAPTURE_MARGIN_S)
        self._log(cfg.w_start, math.nan, math.nan, "start")

        for k in range(1, cfg.max_steps + 1):
            width = cfg.w_start - k * cfg.delta_w
            if width < cfg.w_min - _WIDTH_EPS:
                break
            self.gripper.set_width(width)
            try:
                reading = self._capture_reading()
            except NoDecision as e:
                logger.warning("No decision at %.3f mm, treating as no contact: %s", width, e)
                self._log(width, math.nan, math.nan, "no_decision")
                continue
            if reading <= cfg.contact.epsilon:
                self._log(width, reading, math.nan, "contact")
                return width, reading
            self._log(width, reading, math.nan, "no_contact")
        raise NoObjectError(f"No contact between {cfg.w_start} mm and {cfg.w_min} mm")

    def estimate_size(self) -> float:
        width, _ = self.close_until_contact()
        estimate = width + self.cfg.delta_w
        if self.cfg.secure_extra > 0:
            secured = self.gripper.set_width(max(width - self.cfg.secure_extra, self.cfg.w_min))
            self._log(secured, math.nan, math.nan, "secured")
        logger.info("Size estimate %.3f mm", estimate)
        return estimate

    def grasp_to_force(self, target: float, band: float, model: LinearModel) -> Tuple[float, float]:
        """
        Close to contact, then keep stepping until the force estimate is within
        target +/- band. Stops before a step the local secant projects past
        target + band.
        """
        if not target > 0 or band < 0:
            raise ValueError("Need target > 0 and band >= 0")
        if model.output_unit != UNIT_NEWTONS:
            raise UnitMismatch(f"Force control needs a model in {UNIT_NEWTONS}, got {model.output_unit}")
        cfg = self.cfg
        width, reading = self.close_until_contact()
        force = estimate_force(reading, model).value
        history = [(width, force)]

        while True:
            if force > target + band:
                self._log(width, reading, force, "overshoot")
                raise OvershootError(f"Force {force:.3f} N above {target + band:.3f} N at {width:.3f} mm",
                                     width, force)
            if force >= target - band:
                self._log(width, reading, force, "in_band")
                return width, force

            next_width = width - cfg.delta_w
            if next_width < cfg.w_min - _WIDTH_EPS:
                self._log(width, reading, force, "width_limit")
                raise ForceUnreachable(f"Width limit {cfg.w_min} mm reached at {force:.3f} N", width, force)
            if len(history) >= 2:
                (w0, f0), (w1, f1) = history[-2], history[-1]
                projected = f1 + (f1 - f0) / (w1 - w0) * (next_width - w1)
                if projected > target + band:
                    self._log(width, reading, force, "projected_overshoot")
                    raise OvershootError(
                        f"Next step projected to {projected:.3f} N, above {target + band:.3f} N",
                        width, force, projected=True,
                    )
            self._log(width, reading, force, "below_target")

            width = next_width
            self.gripper.set_width(width)
            try:
                reading = self._capture_reading()
            except NoDecision as e:
                logger.warning("No decision at %.3f mm, keeping last force estimate: %s", width, e)
                continue
            force = estimate_force(reading, model).value
            history.append((width, force))


def estimate_size(gripper: GripperPort, cfg: SizeEstimationConfig) -> float:
    return GraspController(gripper, cfg).estimate_size()


def grasp_to_force(gripper: GripperPort, target: float, band: float, model: LinearModel,
                   cfg: SizeEstimationConfig) -> Tuple[float, float]:
    return GraspController(gripper, cfg).grasp_to_force(target, band, model)


def _window_reading(window: ResistanceTrace, scope: str) -> float:
    if scope == SCOPE_AGGREGATE:
        values = window.aggregate_rel[np.isfinite(window.aggregate_rel)]
        if values.size == 0:
            raise NoDecision("Window has no valid samples")
        return float(values.mean())
    valid = np.isfinite(window.per_pixel_rel)
    counts = valid.sum(axis=1)
    if not counts.any():
        raise NoDecision("Window has no valid samples")
    sums = np.where(valid, window.per_pixel_rel, 0.0).sum(axis=1)
    return float(min(s / n for s, n in zip(sums, counts) if n))


def monitor_presence(windows: Iterable[ResistanceTrace], cfg: ContactConfig = ContactConfig()) -> Iterator[PresenceUpdate]:
    """
    Present / absent per window from the window-mean reading; a present to
    absent transition carries a removed event. Undecidable windows keep the
    previous state. Only epsilon and scope are read from cfg: windows carry
    no actuation, so settle_policy, t_a, t_c and peak_within do not apply.
    """
    state = ABSENT
    for index, window in enumerate(windows):
        t_start = float(window.times[0]) if window.n_samples else math.nan
        try:
            reading = _window_reading(window, cfg.scope)
        except NoDecision as e:
            logger.warning("Window %d: %s; keeping state %s", index, e, state)
            yield PresenceUpdate(index, t_start, state, math.nan)
            continue
        new_state = PRESENT if reading <= cfg.epsilon else ABSENT
        event = REMOVED if state == PRESENT and new_state == ABSENT else None
        if event:
            logger.info("Object removed at t=%.3f s", t_start)
        state = new_state
        yield PresenceUpdate(index, t_start, state, reading, event)
