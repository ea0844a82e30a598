"""
Tactile Toolkit - Calibration
Linear force / stiffness models over settled relative resistance, and the
calibration profile that bundles them with the sensor baseline
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from errors import (
    DegenerateAbscissa,
    InsufficientData,
    InvalidBaseline,
    ProfileParseError,
    ShapeError,
    UnitMismatch,
)
from section_file import fmt_float, fmt_floats, format_sections, read_sections, write_atomic
from sensor_model import DividerConfig, PixelBaseline

logger = logging.getLogger(__name__)

UNIT_NEWTONS = "newtons"
UNIT_STIFFNESS = "newtons_per_mm"
UNIT_POUNDS = "pounds_grip"
OUTPUT_UNITS = (UNIT_NEWTONS, UNIT_STIFFNESS, UNIT_POUNDS)


@dataclass(frozen=True)
class LinearModel:
    """output = slope * c_star + intercept"""

    slope: float
    intercept: float
    r_squared: float = 1.0
    n_points: int = 2
    output_unit: str = UNIT_NEWTONS

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("A linear model needs at least 2 points")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError(f"r_squared {self.r_squared} outside [0, 1]")
        if self.output_unit not in OUTPUT_UNITS:
            raise ValueError(f"Unknown output unit '{self.output_unit}'")

    def evaluate(self, c_star: float) -> float:
        return self.slope * c_star + self.intercept

    def inverse(self, output: float) -> float:
        """c_star that maps to output"""
        if self.slope == 0:
            raise DegenerateAbscissa("Flat model has no inverse")
        return (output - self.intercept) / self.slope


@dataclass(frozen=True)
class Estimate:
    value: float
    below_range: bool = False


# Published force lines for four silicone pad materials (N per %, N)
PUBLISHED_FORCE_MODELS: Dict[str, LinearModel] = {
    "dragonskin30": LinearModel(-0.163, 1.81, 0.917, 50, UNIT_NEWTONS),
    "dragonskin20": LinearModel(-0.129, 1.42, 0.986, 50, UNIT_NEWTONS),
    "dragonskin10": LinearModel(-0.111, 2.45, 0.983, 50, UNIT_NEWTONS),
    "ecoflex10": LinearModel(-0.0953, 0.987, 0.985, 50, UNIT_NEWTONS),
}

# Settled relative resistance (%) of each pad, softest first
PUBLISHED_PAD_MEANS: Dict[str, float] = {
    "ecoflex10": -46.0,
    "dragonskin10": -54.7,
    "dragonskin20": -66.9,
    "dragonskin30": -71.5,
}

# Stress balls in grip-strength order
PUBLISHED_BALL_MEANS: Tuple[float, ...] = (-56.4, -59.4, -60.2, -62.2, -62.8, -67.9)

# Apple before/after damage: (mean %, std %) for the exponential estimate,
# the recorded reading and the pixels touching the bruise
PUBLISHED_BRUISE_STATS: Dict[str, Tuple[Tuple[float, float], ...]] = {
    "exponential": ((-24.9, 0.78), (-15.8, 1.3), (-5.89, 3.7)),
    "recorded": ((-21.2, 1.9), (-13.0, 2.4), (-3.75, 1.6)),
}


def fit_linear(points: Sequence[Tuple[float, float]], output_unit: str = UNIT_NEWTONS) -> LinearModel:
    """Ordinary least squares line through (c_star %, output) points"""
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] < 2:
        raise InsufficientData(f"Need at least 2 points for a line, got {data.shape[0]}")
    x, y = data[:, 0], data[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DegenerateAbscissa("All abscissae are equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())

    residual = y - (slope * x + intercept)
    ss_res = float(residual @ residual)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r_squared = 1.0
    else:
        r_squared = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return LinearModel(slope, intercept, r_squared, int(x.size), output_unit)


def _clamped(c_star: float, model: LinearModel, unit: str) -> Estimate:
    if model.output_unit != unit:
        raise UnitMismatch(f"Model outputs {model.output_unit}, expected {unit}")
    value = model.evaluate(c_star)
    if value < 0:
        logger.warning("Estimate %.4g %s below model range at c*=%.4g%%; clamped to 0", value, unit, c_star)
        return Estimate(0.0, True)
    return Estimate(value)


def estimate_force(c_star: float, model: LinearModel) -> Estimate:
    """Grasp force in newtons, clamped at 0 with below_range set"""
    return _clamped(c_star, model, UNIT_NEWTONS)


def estimate_stiffness(c_star: float, model: LinearModel) -> Estimate:
    """Object stiffness in N/mm, clamped at 0 with below_range set"""
    return _clamped(c_star, model, UNIT_STIFFNESS)


def classify_stiffness_rank(c_stars: Sequence[float]) -> Tuple[int, ...]:
    """Indices ordered softest (least negative) to stiffest; ties keep input order"""
    if len(c_stars) < 2:
        raise ValueError("Ranking needs at least 2 values")
    return tuple(sorted(range(len(c_stars)), key=lambda i: -c_stars[i]))


@dataclass(frozen=True)
class CalibrationProfile:
    baseline: PixelBaseline
    divider: DividerConfig = DividerConfig()
    force_models: Dict[str, LinearModel] = field(default_factory=dict)
    stiffness_model: Optional[LinearModel] = None
    created_at: str = ""

    @property
    def sensor_geometry(self) -> Tuple[int, int]:
        return self.baseline.shape

    def force_model(self, material: str) -> LinearModel:
        if material not in self.force_models:
            known = ", ".join(sorted(self.force_models)) or "none"
            raise KeyError(f"No force model for '{material}' (profile has: {known})")
        return self.force_models[material]

    def with_force_model(self, material: str, model: LinearModel) -> "CalibrationProfile":
        models = dict(self.force_models)
        models[material] = model
        return CalibrationProfile(self.baseline, self.divider, models, self.stiffness_model, self.created_at)

    def with_stiffness_model(self, model: LinearModel) -> "CalibrationProfile":
        return CalibrationProfile(self.baseline, self.divider, dict(self.force_models), model, self.created_at)


def _model_entries(model: LinearModel):
    return [
        ("slope", fmt_float(model.slope)),
        ("intercept", fmt_float(model.intercept)),
        ("r_squared", fmt_float(model.r_squared)),
        ("n_points", str(model.n_points)),
        ("output_unit", model.output_unit),
    ]


def _valid_material(name: str) -> bool:
    return bool(name) and not any(ch.isspace() or ch in "[]=#" for ch in name)


def save_profile(profile: CalibrationProfile, path):
    sections = [
        ("profile", [("created_at", profile.created_at)]),
        ("baseline", [
            ("rows", str(profile.baseline.rows)),
            ("cols", str(profile.baseline.cols)),
            ("r_avg", fmt_floats(profile.baseline.r_avg)),
        ]),
        ("divider", [("v_ref", fmt_float(profile.divider.v_ref)), ("r_fixed", fmt_float(profile.divider.r_fixed))]),
    ]
    for material in sorted(profile.force_models):
        if not _valid_material(material):
            raise ValueError(f"Material name '{material}' cannot be stored in a profile")
        sections.append((f"force.{material}", _model_entries(profile.force_models[material])))
    if profile.stiffness_model is not None:
        sections.append(("stiffness", _model_entries(profile.stiffness_model)))
    write_atomic(path, format_sections(sections, header="tactile calibration profile"))


def _read_model(section) -> LinearModel:
    unit = section.get_str("output_unit")
    try:
        return LinearModel(
            slope=section.get_float("slope"),
            intercept=section.get_float("intercept"),
            r_squared=section.get_float("r_squared"),
            n_points=section.get_int("n_points"),
            output_unit=unit,
        )
    except ValueError as e:
        raise ProfileParseError(str(e), section.line) from None


def load_profile(path) -> CalibrationProfile:
    sections = read_sections(path)
    if "baseline" not in sections:
        raise ProfileParseError("Profile has no [baseline] section")

    force_models = {}
    stiffness_model = None
    for name, section in sections.items():
        if name.startswith("force."):
            material = name[len("force."):]
            if not _valid_material(material):
                raise ProfileParseError(f"Bad material name in [{name}]", section.line)
            force_models[material] = _read_model(section)
        elif name == "stiffness":
            stiffness_model = _read_model(section)
        elif name not in ("profile", "baseline", "divider"):
            raise ProfileParseError(f"Unknown section [{name}]", section.line)

    base = sections["baseline"]
    try:
        baseline = PixelBaseline(base.get_int("rows"), base.get_int("cols"), base.get_floats("r_avg"))
    except (ShapeError, InvalidBaseline) as e:
        raise ProfileParseError(str(e), base.raw("r_avg")[1], "r_avg") from None

    divider = DividerConfig()
    if "divider" in sections:
        div = sections["divider"]
        try:
            divider = DividerConfig(div.get_float("v_ref"), div.get_float("r_fixed"))
        except ValueError as e:
            raise ProfileParseError(str(e), div.line) from None

    created_at = sections["profile"].get_str("created_at", "") if "profile" in sections else ""
    return CalibrationProfile(baseline, divider, force_models, stiffness_model, created_at)

