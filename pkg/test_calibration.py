"""Tests for linear calibration models, estimates, ranking and profile files"""

import numpy as np
import pytest

from calibration import (
    PUBLISHED_BALL_MEANS,
    PUBLISHED_FORCE_MODELS,
    PUBLISHED_PAD_MEANS,
    UNIT_NEWTONS,
    UNIT_POUNDS,
    UNIT_STIFFNESS,
    CalibrationProfile,
    LinearModel,
    classify_stiffness_rank,
    estimate_force,
    estimate_stiffness,
    fit_linear,
    load_profile,
    save_profile,
)
from decay_fitter import fit_decay, window_for
from errors import DegenerateAbscissa, InsufficientData, ProfileParseError, UnitMismatch
from section_file import parse_sections
from sensor_model import DividerConfig, PixelBaseline
from sensor_simulator import SimObject, SimSensorParams, simulate_grasp

DRAGONSKIN30 = PUBLISHED_FORCE_MODELS["dragonskin30"]


class TestFitLinear:
    def test_two_point_line(self):
        model = fit_linear([(0.0, 1.81), (-10.0, 3.44)])
        assert model.slope == pytest.approx(-0.163)
        assert model.intercept == pytest.approx(1.81)
        assert model.r_squared == pytest.approx(1.0)

    def test_exact_line(self):
        model = fit_linear([(x, 2.0 * x + 1.0) for x in range(5)])
        assert (model.slope, model.intercept) == (pytest.approx(2.0), pytest.approx(1.0))
        assert model.r_squared == pytest.approx(1.0)
        assert model.n_points == 5

    @pytest.mark.parametrize("material", sorted(PUBLISHED_FORCE_MODELS))
    def test_noisy_published_lines(self, material):
        truth = PUBLISHED_FORCE_MODELS[material]
        rng = np.random.default_rng(11)
        x = rng.uniform(-80.0, -10.0, 50)
        y = truth.evaluate(x) + rng.normal(0.0, 0.1, 50)
        model = fit_linear(list(zip(x, y)))
        assert model.slope == pytest.approx(truth.slope, rel=0.05)
        assert model.r_squared > 0.9

    def test_passes_through_centroid(self):
        rng = np.random.default_rng(5)
        points = rng.normal(size=(20, 2))
        model = fit_linear(points)
        assert model.evaluate(points[:, 0].mean()) == pytest.approx(points[:, 1].mean())

    def test_equal_abscissae(self):
        with pytest.raises(DegenerateAbscissa):
            fit_linear([(1.0, 2.0), (1.0, 3.0)])

    def test_single_point(self):
        with pytest.raises(InsufficientData):
            fit_linear([(1.0, 2.0)])


class TestEstimates:
    def test_intercept(self):
        assert estimate_force(0.0, DRAGONSKIN30).value == pytest.approx(1.81, abs=1e-12)

    def test_force_at_minus_fifty(self):
        assert estimate_force(-50.0, DRAGONSKIN30).value == pytest.approx(9.96, abs=1e-9)

    def test_clamped_below_range(self):
        estimate = estimate_force(20.0, DRAGONSKIN30)
        assert estimate.value == 0.0
        assert estimate.below_range

    def test_unit_mismatch(self):
        with pytest.raises(UnitMismatch):
            estimate_stiffness(-20.0, DRAGONSKIN30)
        with pytest.raises(UnitMismatch):
            estimate_force(-20.0, LinearModel(-0.1, 0.0, output_unit=UNIT_STIFFNESS))

    def test_grip_pounds_model_is_not_a_force_model(self):
        grip = LinearModel(-0.29, 3.2, output_unit=UNIT_POUNDS)
        assert grip.evaluate(-10.0) == pytest.approx(6.1)
        with pytest.raises(UnitMismatch):
            estimate_force(-10.0, grip)
        with pytest.raises(UnitMismatch):
            estimate_stiffness(-10.0, grip)

    def test_inverse(self):
        assert DRAGONSKIN30.inverse(DRAGONSKIN30.evaluate(-37.0)) == pytest.approx(-37.0)

    def test_stiffness_round_trip_through_simulator(self):
        """Fit settled values at 1 mm compression, then read each stiffness back"""
        params = SimSensorParams()
        schedule = [(0.0, 45.0), (2.0, 34.0)]
        c_stars = {}
        for k in (1.0, 2.0, 4.0, 8.0):
            result = simulate_grasp(SimObject(35.0, k), schedule, params, seed=int(k), duration=23.0)
            trace = result.trace()
            c_stars[k] = fit_decay(trace, window_for(trace, t_c=20.0)).c_star
        points = [(params.settled_for(k * 1.0), k) for k in (0.5, 16.0)]
        model = fit_linear(points, UNIT_STIFFNESS)
        for k, c_star in c_stars.items():
            assert estimate_stiffness(c_star, model).value == pytest.approx(k, rel=0.10)


class TestStiffnessRank:
    def test_published_pads(self):
        means = [PUBLISHED_PAD_MEANS[m] for m in ("ecoflex10", "dragonskin30", "dragonskin10", "dragonskin20")]
        assert means == [-46.0, -71.5, -54.7, -66.9]
        assert classify_stiffness_rank(means) == (0, 2, 3, 1)

    def test_ties_keep_input_order(self):
        assert classify_stiffness_rank([-5.0, -5.0, -5.0]) == (0, 1, 2)

    def test_ball_means_already_sorted(self):
        assert classify_stiffness_rank(PUBLISHED_BALL_MEANS) == tuple(range(len(PUBLISHED_BALL_MEANS)))


class TestProfiles:
    def make_profile(self):
        baseline = PixelBaseline(2, 2, (4612.25, 4700.0, 4801.125, 4733.0 / 3.0))
        profile = CalibrationProfile(baseline, DividerConfig(5.0, 4700.0), created_at="2024-05-01T10:00:00")
        profile = profile.with_force_model("dragonskin20", PUBLISHED_FORCE_MODELS["dragonskin20"])
        return profile.with_stiffness_model(LinearModel(-0.1 / 3.0, 0.25, 0.96, 12, UNIT_STIFFNESS))

    def test_round_trip_is_lossless(self, tmp_path):
        profile = self.make_profile()
        path = tmp_path / "profile.txt"
        save_profile(profile, path)
        assert load_profile(path) == profile

    def test_round_trip_keeps_every_force_model(self, tmp_path):
        profile = self.make_profile().with_force_model("ecoflex10", PUBLISHED_FORCE_MODELS["ecoflex10"])
        profile = profile.with_force_model("grip", LinearModel(-0.29, 3.2, 0.9, 7, UNIT_POUNDS))
        path = tmp_path / "profile.txt"
        save_profile(profile, path)
        loaded = load_profile(path)
        assert sorted(loaded.force_models) == ["dragonskin20", "ecoflex10", "grip"]
        assert loaded.force_model("ecoflex10") == PUBLISHED_FORCE_MODELS["ecoflex10"]
        assert loaded.force_model("dragonskin20") == PUBLISHED_FORCE_MODELS["dragonskin20"]
        assert loaded.force_model("grip").output_unit == UNIT_POUNDS
        assert loaded == profile

    def test_default_profile_round_trip(self, tmp_path):
        profile = CalibrationProfile(PixelBaseline(1, 1, (4700.0,)))
        save_profile(profile, tmp_path / "p.txt")
        assert load_profile(tmp_path / "p.txt") == profile

    def test_missing_baseline(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[divider]\nv_ref = 5\nr_fixed = 4700\n")
        with pytest.raises(ProfileParseError):
            load_profile(path)

    def test_bad_number_reports_line_and_field(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[baseline]\nrows = 1\ncols = 2\nr_avg = 4700, abc\n")
        with pytest.raises(ProfileParseError) as info:
            load_profile(path)
        assert info.value.line == 4
        assert info.value.field == "r_avg"

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "binary.txt"
        path.write_bytes(b"[baseline]\nrows = 1\ncols = 1\nr_avg = 4700\xe9\n")
        with pytest.raises(ProfileParseError):
            load_profile(path)

    def test_unknown_material(self):
        with pytest.raises(KeyError):
            self.make_profile().force_model("ecoflex10")

    def test_geometry(self):
        assert self.make_profile().sensor_geometry == (2, 2)


class TestSectionGrammar:
    def test_duplicate_key(self):
        with pytest.raises(ProfileParseError) as info:
            parse_sections("[a]\nx = 1\nx = 2\n")
        assert info.value.line == 3

    def test_entry_before_section(self):
        with pytest.raises(ProfileParseError):
            parse_sections("x = 1\n")

    def test_comments_and_lists(self):
        sections = parse_sections("# note\n[a]\nvalues = 1.5, 2.5\n")
        assert sections["a"].get_floats("values") == (1.5, 2.5)
