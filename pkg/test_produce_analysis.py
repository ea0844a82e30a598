"""Tests for ripeness trends and bruise detection / localization"""

import numpy as np
import pytest

from calibration import PUBLISHED_BRUISE_STATS
from errors import IncomparableSessions
from produce_analysis import (
    ANOMALOUS,
    NOMINAL,
    POLICY_MIDPOINT,
    POLICY_WELCH,
    SOFTENING,
    STABLE,
    SessionRecord,
    detect_bruise,
    localize_bruise,
    pixel_settled,
    reference_pixel_margins,
    ripeness_trend,
    shifted_pixels,
)
from sensor_simulator import SimObject, SimSensorParams, simulate_grasp

(HEALTHY_MEAN, HEALTHY_STD), (BRUISED_MEAN, BRUISED_STD), _ = PUBLISHED_BRUISE_STATS["exponential"]


def session(session_id, day, values, width=33.0):
    return SessionRecord(session_id, day, tuple(values), width)


def gaussian_session(session_id, mean, std, n, rng):
    return session(session_id, 0, rng.normal(mean, std, n))


class TestRipenessTrend:
    def test_softening(self):
        sessions = [session(f"d{d}", d, [m - 0.5, m + 0.5]) for d, m in enumerate([-25, -20, -14, -9])]
        trend = ripeness_trend(sessions)
        assert trend.slope > 0
        assert trend.direction == SOFTENING

    def test_identical_means(self):
        sessions = [session(f"d{d}", d, [-20.0]) for d in range(3)]
        trend = ripeness_trend(sessions)
        assert trend.slope == pytest.approx(0.0)
        assert trend.direction == STABLE

    def test_single_session(self):
        with pytest.raises(IncomparableSessions):
            ripeness_trend([session("d0", 0, [-20.0])])

    def test_width_mismatch(self):
        with pytest.raises(IncomparableSessions):
            ripeness_trend([session("a", 0, [-20.0]), session("b", 1, [-18.0], width=30.0)])

    def test_day_shift_and_scale(self):
        means = [-25, -21, -16, -12]
        base = ripeness_trend([session("x", d, [m]) for d, m in enumerate(means)])
        shifted = ripeness_trend([session("x", d + 10, [m]) for d, m in enumerate(means)])
        scaled = ripeness_trend([session("x", 3 * d, [m]) for d, m in enumerate(means)])
        assert shifted.slope == pytest.approx(base.slope)
        assert scaled.slope == pytest.approx(base.slope / 3.0)


class TestDetectBruise:
    def test_published_contrast(self):
        rng = np.random.default_rng(8)
        reference = gaussian_session("ref", HEALTHY_MEAN, HEALTHY_STD, 10, rng)
        observed = gaussian_session("obs", BRUISED_MEAN, BRUISED_STD, 10, rng)
        for policy in (POLICY_MIDPOINT, POLICY_WELCH):
            assert detect_bruise(reference, observed, policy).verdict == ANOMALOUS

    @pytest.mark.parametrize("policy", [POLICY_MIDPOINT, POLICY_WELCH])
    def test_identical_sessions_are_nominal(self, policy):
        reference = session("ref", 0, [-24.1, -25.6, -24.9, -25.3])
        assert detect_bruise(reference, reference, policy).verdict == NOMINAL

    def test_midpoint_with_damaged_calibration(self):
        reference = session("ref", 0, [-25.0, -24.8])
        damaged = session("dmg", 0, [-15.0, -16.6])
        verdict = detect_bruise(reference, session("obs", 1, [-19.0]), damaged=damaged)
        assert verdict.threshold == pytest.approx(-20.35)
        assert verdict.verdict == ANOMALOUS

    def test_welch_needs_three_trials(self):
        with pytest.raises(IncomparableSessions):
            detect_bruise(session("a", 0, [-25.0, -24.0]), session("b", 0, [-15.0, -16.0]), POLICY_WELCH)

    def test_width_mismatch(self):
        with pytest.raises(IncomparableSessions):
            detect_bruise(session("a", 0, [-25.0]), session("b", 0, [-15.0], width=30.0))

    @pytest.mark.parametrize("policy", [POLICY_MIDPOINT, POLICY_WELCH])
    def test_classification_accuracy(self, policy):
        rng = np.random.default_rng(1000)
        reference = gaussian_session("ref", HEALTHY_MEAN, HEALTHY_STD, 10, rng)
        correct = 0
        for trial in range(1000):
            bruised = trial % 2 == 1
            mean, std = (BRUISED_MEAN, BRUISED_STD) if bruised else (HEALTHY_MEAN, HEALTHY_STD)
            observed = gaussian_session(f"t{trial}", mean, std, 5, rng)
            verdict = detect_bruise(reference, observed, policy)
            correct += (verdict.verdict == ANOMALOUS) == bruised
        assert correct / 1000 >= 0.95

    def test_policies_agree_on_separated_sessions(self):
        rng = np.random.default_rng(21)
        reference = gaussian_session("ref", -30.0, 0.5, 8, rng)
        far = gaussian_session("far", -23.5, 0.5, 8, rng)
        near = gaussian_session("near", -30.0, 0.5, 8, rng)
        for observed in (far, near):
            verdicts = {detect_bruise(reference, observed, p).verdict for p in (POLICY_MIDPOINT, POLICY_WELCH)}
            assert len(verdicts) == 1


class TestLocalizeBruise:
    def test_published_pixel_contrast(self):
        flagged = shifted_pixels([-5.89, -24.9], [-24.9, -24.9], 3 * HEALTHY_STD)
        assert flagged == {0}

    def test_all_at_reference(self):
        assert shifted_pixels([-20.0] * 4, [-20.0] * 4, 1.0) == set()

    def test_missing_pixels_skipped(self):
        assert shifted_pixels([np.nan, -5.0], [-20.0, np.nan], 1.0) == set()

    def test_margin_monotone(self):
        settled = [-10.0, -14.0, -18.0, -20.0]
        reference = [-20.0] * 4
        sizes = [len(shifted_pixels(settled, reference, m)) for m in (0.5, 3.0, 7.0, 12.0)]
        assert sizes == sorted(sizes, reverse=True)

    def test_one_shifted_pixel_in_a_simulated_grasp(self):
        """Reference grasps on a healthy item, then a grasp where pixel 2 sits on a soft spot"""
        params = SimSensorParams(noise_sigma=0.0)
        schedule = [(0.0, 40.0), (2.0, 33.0)]
        healthy = SimObject(35.0, 2.0)
        reference_fits = []
        for seed in range(3):
            trace = simulate_grasp(healthy, schedule, params, seed, duration=24.0).trace()
            reference_fits.append(pixel_settled(trace, t_c=20.0))
        reference, margins = reference_pixel_margins(reference_fits)

        bruised = SimObject(35.0, 2.0, (True, True, False, True))
        trace = simulate_grasp(bruised, schedule, params, 99, duration=24.0).trace()
        flagged = localize_bruise(trace, reference, np.maximum(margins, 1.0), t_c=20.0)
        assert flagged == {2}
