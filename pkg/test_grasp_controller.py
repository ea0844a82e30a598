"""Tests for contact detection, size estimation, force-target grasping and presence monitoring"""

import numpy as np
import pytest

from calibration import UNIT_POUNDS, LinearModel
from decay_fitter import SETTLE_RAW
from errors import ForceUnreachable, NoObjectError, OvershootError, UnitMismatch
from grasp_controller import (
    ABSENT,
    PRESENT,
    REMOVED,
    SCOPE_ANY_PIXEL,
    ContactConfig,
    GraspController,
    SizeEstimationConfig,
    contact_reading,
    detect_contact,
    estimate_size,
    grasp_to_force,
    monitor_presence,
)
from sensor_model import ResistanceTrace, aggregate_pixels
from sensor_simulator import SimObject, SimSensorParams, SimulatedGripper, simulate_grasp

RATE = 15.0
MODEL = LinearModel(-0.129, 0.0)
DEFAULTS = SimSensorParams()
QUIET_PARAMS = DEFAULTS.with_(noise_sigma=0.01)


def settled_trace(level, duration=4.0, t_act=0.5):
    """Step from 0 to a constant level at t_act (no transient)"""
    times = np.arange(int(duration * RATE) + 1) / RATE
    values = np.where(times >= t_act, level, 0.0)[None, :]
    return ResistanceTrace(times, values, aggregate_pixels(values), [(t_act, "close_stop")], 1, 1)


def window_trace(level, t0):
    times = t0 + np.arange(15) / RATE
    values = np.full((1, 15), float(level))
    return ResistanceTrace(times, values, aggregate_pixels(values), (), 1, 1)


class TestDetectContact:
    def test_above_threshold(self):
        assert detect_contact(settled_trace(-12.0), ContactConfig(epsilon=-10.0))

    def test_just_below_threshold(self):
        assert not detect_contact(settled_trace(-9.9), ContactConfig(epsilon=-10.0))

    def test_flat_trace(self):
        assert not detect_contact(settled_trace(0.0))

    def test_threshold_must_be_negative(self):
        with pytest.raises(ValueError):
            ContactConfig(epsilon=1.0)

    def test_peak_search_bound_must_be_positive(self):
        with pytest.raises(ValueError):
            ContactConfig(peak_within=0.0)

    def test_any_pixel_sees_a_single_loaded_pixel(self):
        times = np.arange(int(4.0 * RATE) + 1) / RATE
        values = np.zeros((4, times.size))
        values[0, times >= 0.5] = -30.0
        trace = ResistanceTrace(times, values, aggregate_pixels(values), [(0.5, "close_stop")], 2, 2)
        assert contact_reading(trace, ContactConfig()) == pytest.approx(-7.5)
        assert not detect_contact(trace, ContactConfig(epsilon=-10.0))
        assert detect_contact(trace, ContactConfig(epsilon=-10.0, scope=SCOPE_ANY_PIXEL))

    def test_monotone_in_threshold(self):
        result = simulate_grasp(SimObject(35.0, 2.0), [(0.0, 40.0), (2.0, 34.0)], DEFAULTS, seed=8)
        trace = result.trace()
        decisions = [detect_contact(trace, ContactConfig(epsilon=eps)) for eps in np.linspace(-40.0, -0.5, 80)]
        assert decisions == sorted(decisions)
        assert not decisions[0] and decisions[-1]


class TestEstimateSize:
    def test_single_object(self):
        gripper = SimulatedGripper(SimObject(35.0, 2.0), DEFAULTS, seed=1)
        cfg = SizeEstimationConfig(w_start=50.0, w_min=5.0, delta_w=1.0)
        assert estimate_size(gripper, cfg) == pytest.approx(35.0, abs=1.0)

    def test_empty_gripper(self):
        gripper = SimulatedGripper(None, DEFAULTS, seed=2)
        cfg = SizeEstimationConfig(w_start=12.0, w_min=5.0, delta_w=1.0)
        controller = GraspController(gripper, cfg)
        with pytest.raises(NoObjectError):
            controller.estimate_size()
        assert controller.events[0].decision == "start"
        assert {e.decision for e in controller.events[1:]} <= {"no_contact", "no_decision"}
        assert len(controller.events) == 8

    @pytest.mark.parametrize("seed_offset", [0, 100, 200])
    def test_strawberry_batch(self, seed_offset):
        rng = np.random.default_rng(2024)
        diameters = rng.uniform(31.0, 41.0, 10)
        cfg = SizeEstimationConfig(w_start=50.0, w_min=5.0, delta_w=1.0)
        errors = []
        for i, d in enumerate(diameters):
            gripper = SimulatedGripper(SimObject(float(d), 2.0), DEFAULTS, seed=seed_offset + i)
            errors.append(estimate_size(gripper, cfg) - d)
        errors = np.array(errors)
        assert np.all(np.abs(errors) <= 1.0)
        assert np.sqrt(np.mean(errors ** 2)) <= 1.0
        assert np.mean(np.abs(errors) / diameters) * 100.0 <= 3.0

    def test_larger_object_never_gets_smaller_estimate(self):
        diameters = np.arange(31.0, 41.0 + 1e-9, 0.25)
        cfg = SizeEstimationConfig(w_start=50.0, w_min=5.0, delta_w=1.0)
        estimates = np.array([estimate_size(SimulatedGripper(SimObject(float(d), 2.0), DEFAULTS, seed=3), cfg)
                              for d in diameters])
        assert np.all(np.diff(estimates) >= 0)
        assert np.all(np.abs(estimates - diameters) <= 1.0)

    def test_raw_reading_policy_finds_contact(self):
        contact = ContactConfig(settle_policy=SETTLE_RAW)
        cfg = SizeEstimationConfig(w_start=50.0, w_min=5.0, delta_w=1.0, contact=contact)
        for seed, d in enumerate((32.0, 35.0, 38.5)):
            gripper = SimulatedGripper(SimObject(d, 2.0), DEFAULTS, seed=seed)
            assert estimate_size(gripper, cfg) == pytest.approx(d, abs=1.0)

    def test_secures_past_contact(self):
        gripper = SimulatedGripper(SimObject(35.0, 2.0), DEFAULTS, seed=1)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=5.0, delta_w=1.0, secure_extra=2.0)
        controller = GraspController(gripper, cfg)
        controller.estimate_size()
        contact = next(e for e in controller.events if e.decision == "contact")
        assert controller.events[-1].decision == "secured"
        assert gripper.current_width() == pytest.approx(contact.width_mm - 2.0)


class TestGraspToForce:
    def test_reaches_band(self):
        gripper = SimulatedGripper(SimObject(35.0, 2.0), QUIET_PARAMS, seed=3)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=5.0, delta_w=0.25)
        width, force = grasp_to_force(gripper, 4.0, 0.5, MODEL, cfg)
        assert 3.5 <= force <= 4.5
        assert gripper.true_force() == pytest.approx(4.0, abs=1.0)

    def test_stops_at_first_contact_when_band_covers_it(self):
        gripper = SimulatedGripper(SimObject(35.0, 2.0), DEFAULTS, seed=4)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=5.0, delta_w=1.0)
        controller = GraspController(gripper, cfg)
        width, _ = controller.grasp_to_force(1.5, 1.0, MODEL)
        assert width == pytest.approx(34.0)
        assert controller.events[-1].decision == "in_band"
        assert controller.events[-2].decision == "contact"

    def test_rigid_object_overshoots(self):
        gripper = SimulatedGripper(SimObject(35.0, 50.0), DEFAULTS, seed=5)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=5.0, delta_w=0.1)
        with pytest.raises(OvershootError) as info:
            grasp_to_force(gripper, 1.0, 0.05, MODEL, cfg)
        assert info.value.force > 1.05

    def test_soft_object_is_unreachable(self):
        gripper = SimulatedGripper(SimObject(35.0, 0.1), DEFAULTS, seed=6)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=20.0, delta_w=1.0, contact=ContactConfig(epsilon=-2.0))
        with pytest.raises(ForceUnreachable) as info:
            grasp_to_force(gripper, 4.0, 0.5, MODEL, cfg)
        assert info.value.width == pytest.approx(20.0)

    def test_grip_pounds_model_is_rejected(self):
        gripper = SimulatedGripper(SimObject(35.0, 2.0), DEFAULTS, seed=7)
        cfg = SizeEstimationConfig(w_start=40.0, w_min=5.0, delta_w=1.0)
        with pytest.raises(UnitMismatch):
            grasp_to_force(gripper, 4.0, 0.5, LinearModel(-0.29, 0.0, output_unit=UNIT_POUNDS), cfg)

class TestMonitorPresence:
    def states(self, levels):
        windows = [window_trace(level, float(i)) for i, level in enumerate(levels)]
        return list(monitor_presence(windows, ContactConfig(epsilon=-10.0)))

    def test_removal(self):
        updates = self.states([-15, -15, 0])
        assert [u.state for u in updates] == [PRESENT, PRESENT, ABSENT]
        assert [u.event for u in updates] == [None, None, REMOVED]

    def test_always_empty(self):
        updates = self.states([0, 0, 0])
        assert all(u.state == ABSENT and u.event is None for u in updates)

    def test_alternating(self):
        updates = self.states([-15, 0, -15, 0])
        assert [u.event for u in updates] == [None, REMOVED, None, REMOVED]

    def test_settle_policy_does_not_change_window_readings(self):
        windows = [window_trace(level, float(i)) for i, level in enumerate([-15, -12, 0, -30])]
        fit = list(monitor_presence(windows, ContactConfig(epsilon=-10.0)))
        raw = list(monitor_presence(windows, ContactConfig(epsilon=-10.0, settle_policy=SETTLE_RAW, t_c=0.1)))
        assert fit == raw
        assert [u.settled for u in fit] == [pytest.approx(v) for v in (-15.0, -12.0, 0.0, -30.0)]
