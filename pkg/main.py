#!/usr/bin/env python3
"""
Tactile Toolkit - Main CLI Interface
Fits grasp transients, manages calibration profiles and runs simulator experiments
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from calibration import (
    PUBLISHED_FORCE_MODELS,
    UNIT_NEWTONS,
    UNIT_STIFFNESS,
    CalibrationProfile,
    LinearModel,
    estimate_force,
    estimate_stiffness,
    fit_linear,
    load_profile,
    save_profile,
)
from decay_fitter import DEFAULT_T_A, DEFAULT_T_C, SETTLE_FIT, SETTLE_POLICIES, fit_decay, window_for
from errors import EXIT_DATA, EXIT_OK, EXIT_USAGE, FormatError, ShapeError, TactileError
from frame_io import (
    RESULT_KINDS,
    parse_frames,
    read_results,
    read_session,
    read_truth,
    truth_path,
    write_bench,
    write_event_log,
    write_fit_results,
    write_frames,
    write_plot_data,
    write_presence_log,
    write_session,
    write_sweep,
    write_truth,
)
from grasp_controller import (
    DEFAULT_EPSILON,
    DEFAULT_SECURE_EXTRA,
    SCOPE_AGGREGATE,
    SCOPE_ANY_PIXEL,
    ContactConfig,
    GraspController,
    SizeEstimationConfig,
    monitor_presence,
)
from produce_analysis import BRUISE_POLICIES, DEFAULT_S_MIN, POLICY_MIDPOINT, SessionRecord, detect_bruise, ripeness_trend
from sensor_model import DividerConfig, build_trace, capture_baseline, split_windows
from sensor_simulator import (
    DEFAULT_CUTOFFS,
    DEFAULT_REPEATS,
    REFERENCE_RECORDED,
    REFERENCE_TRUTH,
    CorpusSpec,
    SimObject,
    SimScenario,
    SimSensorParams,
    SimulatedGripper,
    load_scenario,
    run_cutoff_sweep,
    run_force_benchmark,
    save_scenario,
    simulate_scenario,
)

load_dotenv()

logger = logging.getLogger("tactile")


class UsageError(Exception):
    """Bad flags or flag combinations (exit 1)"""


class ToolkitArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the toolkit reserves 2 for data errors"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging():
    level_name = os.getenv("TACTILE_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )


def banner(title: str):
    print("=" * 70)
    print(title)
    print("=" * 70)


def text_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(headers)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(headers, widths)),
             "  ".join("-" * w for w in widths)]
    lines.extend("  ".join(str(c).rjust(w) for c, w in zip(row, widths)) for row in rows)
    return "\n".join(lines)


def csv_block(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buffer.getvalue()


def _num(value: float, digits: int = 4) -> str:
    return "nan" if not math.isfinite(value) else f"{value:.{digits}g}"


def load_trace(frames_path: str, profile_path: Optional[str]):
    """Frames plus marks normalized against a profile baseline (or the quiet frames)"""
    frames, marks = parse_frames(frames_path)
    if profile_path:
        profile = load_profile(profile_path)
        baseline, divider = profile.baseline, profile.divider
        if frames and frames[0].shape != baseline.shape:
            raise ShapeError(f"{frames_path} is {frames[0].rows}x{frames[0].cols}, profile is "
                             f"{baseline.rows}x{baseline.cols}")
    else:
        divider = DividerConfig()
        baseline = capture_baseline(frames, divider)
    return build_trace(frames, baseline, divider, marks)


def resolve_force_model(args) -> LinearModel:
    if getattr(args, "profile", None) and args.material:
        try:
            return load_profile(args.profile).force_model(args.material)
        except KeyError as e:
            raise UsageError(str(e.args[0])) from None
    if args.material:
        if args.material not in PUBLISHED_FORCE_MODELS:
            raise UsageError(f"Unknown material '{args.material}' (published: {', '.join(PUBLISHED_FORCE_MODELS)})")
        return PUBLISHED_FORCE_MODELS[args.material]
    raise UsageError("Give --material (with --profile for a calibrated model)")


# Commands

def cmd_fit(args) -> int:
    if args.plot and len(args.frames) != 1:
        raise UsageError("--plot needs exactly one frames file")
    records = []
    for path in args.frames:
        trace = load_trace(path, args.profile)
        window = window_for(trace, args.t_actuation, args.t_a, args.t_c)
        fit = fit_decay(trace, window)
        records.append(fit.to_record())
        if args.plot:
            t = trace.times[trace.times >= window.t_actuation]
            observed = trace.aggregate_rel[trace.times >= window.t_actuation]
            fitted = np.where(t >= window.t_p, fit.predict(t), np.nan)
            write_plot_data(args.plot, t, observed, fitted)
        if args.format != "csv":
            banner(f"DECAY FIT: {path}")
            print(f"  peak t_p     {window.t_p:.4f} s (actuation {window.t_actuation:.4f} s)")
            print(f"  A*           {_num(fit.a_star, 6)} %")
            print(f"  lambda*      {_num(fit.lambda_star, 6)} 1/s")
            print(f"  C* settled   {_num(fit.c_star, 6)} %")
            print(f"  rms          {_num(fit.rms_residual)} %  ({fit.n_samples} samples, p={_num(fit.p_value, 3)})")
            if fit.degenerate:
                print("  ⚠️  Flat window: degenerate fit")
            sidecar = truth_path(path)
            if sidecar.exists():
                truth = read_truth(sidecar)[-1]
                print(f"  truth C      {_num(truth['c_true_pct'], 6)} %  (error {_num(abs(fit.c_star - truth['c_true_pct']))})")

    if args.session_id is not None:
        if args.out is None or args.day_index is None or args.grasp_width is None:
            raise UsageError("--session-id needs --out, --day-index and --grasp-width")
        session = SessionRecord(args.session_id, args.day_index, [r["c_star"] for r in records],
                                args.grasp_width, args.notes)
        write_session(args.out, session, records)
    elif args.out:
        write_fit_results(args.out, records)
    if args.format == "csv":
        fields = list(records[0])
        sys.stdout.write(csv_block(fields, [[repr(r[f]) for f in fields] for r in records]))
    elif args.out:
        print(f"\n✓ Fit results written to {args.out}")
    return EXIT_OK


def _read_points(path: str):
    points = []
    try:
        with open(path, newline="", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise FormatError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["c_star_pct", "value"]:
        raise FormatError(f"{path}: expected header c_star_pct,value", 1)
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            point = (float(row[0]), float(row[1]))
        except (ValueError, IndexError):
            raise FormatError(f"{path}: bad point", line) from None
        if not all(math.isfinite(v) for v in point):
            raise FormatError(f"{path}: point must be finite", line)
        points.append(point)
    return points


def cmd_calibrate(args) -> int:
    if not (args.frames or args.profile):
        raise UsageError("Give --frames (quiet capture) or --profile to start from")
    profile = load_profile(args.profile) if args.profile else None
    divider = profile.divider if profile else DividerConfig()
    if args.frames:
        frames, _ = parse_frames(args.frames)
        baseline = capture_baseline(frames, divider, args.n_quiet)
    else:
        baseline = profile.baseline
    profile = CalibrationProfile(
        baseline,
        divider,
        dict(profile.force_models) if profile else {},
        profile.stiffness_model if profile else None,
        args.created_at or (profile.created_at if profile else ""),
    )

    fitted = []
    if args.published:
        for name, model in PUBLISHED_FORCE_MODELS.items():
            profile = profile.with_force_model(name, model)
    if args.force_points:
        if not args.material:
            raise UsageError("--force-points needs --material")
        model = fit_linear(_read_points(args.force_points), UNIT_NEWTONS)
        profile = profile.with_force_model(args.material, model)
        fitted.append((f"force.{args.material}", model))
    if args.stiffness_points:
        model = fit_linear(_read_points(args.stiffness_points), UNIT_STIFFNESS)
        profile = profile.with_stiffness_model(model)
        fitted.append(("stiffness", model))

    save_profile(profile, args.out)
    banner("CALIBRATION PROFILE")
    print(f"  geometry     {profile.sensor_geometry[0]}x{profile.sensor_geometry[1]}")
    print(f"  baseline     {', '.join(_num(r, 6) for r in profile.baseline.r_avg)} ohm")
    for name, model in fitted:
        print(f"  {name:<12} slope={_num(model.slope)} intercept={_num(model.intercept)} R²={_num(model.r_squared, 3)}")
    print(f"\n✓ Profile written to {args.out}")
    return EXIT_OK


def cmd_estimate_force(args) -> int:
    if (args.c_star is None) == (args.frames is None):
        raise UsageError("Give exactly one of --c-star or --frames")
    if args.frames:
        trace = load_trace(args.frames, args.profile)
        c_star = fit_decay(trace, window_for(trace, None, args.t_a, args.t_c)).c_star
    else:
        c_star = args.c_star

    if args.stiffness:
        if not args.profile:
            raise UsageError("--stiffness needs --profile")
        model = load_profile(args.profile).stiffness_model
        if model is None:
            raise UsageError(f"{args.profile} has no [stiffness] model")
        estimate, unit = estimate_stiffness(c_star, model), "N/mm"
    else:
        estimate, unit = estimate_force(c_star, resolve_force_model(args)), "N"

    if args.format == "csv":
        sys.stdout.write(csv_block(["c_star_pct", "estimate", "unit", "below_range"],
                                   [[repr(c_star), repr(estimate.value), unit, int(estimate.below_range)]]))
    else:
        print(f"C* = {_num(c_star, 6)} %  ->  {_num(estimate.value, 6)} {unit}")
        if estimate.below_range:
            print("⚠️  Below model range: clamped to 0")
    return EXIT_OK


def _sim_params(args) -> SimSensorParams:
    return SimSensorParams(spike_gain=args.spike_gain, noise_sigma=args.noise, quantize_10bit=args.quantize)


def _size_config(args) -> SizeEstimationConfig:
    contact = ContactConfig(args.epsilon, args.scope, args.policy, args.t_a, args.t_c)
    return SizeEstimationConfig(args.w_start, args.w_min, args.delta_w, contact, args.secure_extra)


def cmd_estimate_size(args) -> int:
    params = _sim_params(args)
    obj = None if args.empty else SimObject.sphere(args.diameter, args.stiffness, params.rows, params.cols)
    gripper = SimulatedGripper(obj, params, args.seed)
    controller = GraspController(gripper, _size_config(args))
    try:
        if args.target is not None:
            if args.material:
                model = resolve_force_model(args)
            else:
                model = LinearModel(1.0 / params.settled_slope, -params.settled_intercept / params.settled_slope)
            width, force = controller.grasp_to_force(args.target, args.band, model)
            result = {"width_mm": width, "force_n": force}
        else:
            result = {"size_mm": controller.estimate_size()}
    finally:
        if args.events:
            write_event_log(args.events, controller.events)

    if args.format == "csv":
        sys.stdout.write(csv_block(list(result), [[repr(v) for v in result.values()]]))
    else:
        banner("GRASP RESULT")
        for key, value in result.items():
            print(f"  {key:<10} {_num(value, 6)}")
        print(f"  steps      {len(controller.events)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        if args.diameter is None or args.close_width is None:
            raise UsageError("Give --scenario, or --diameter and --close-width")
        params = _sim_params(args)
        obj = SimObject(args.diameter, args.stiffness)
        open_width = max(args.diameter, args.close_width) + 5.0
        scenario = SimScenario(obj, ((0.0, open_width), (args.close_at, args.close_width)), params, args.duration)
    if args.save_scenario:
        save_scenario(scenario, args.save_scenario)

    result = simulate_scenario(scenario, args.seed)
    write_frames(args.out, result.frames, result.marks)
    write_truth(truth_path(args.out), result.truth)
    print(f"✓ {len(result.frames)} frames written to {args.out}")
    print(f"  final force {_num(result.final_truth.force_n)} N, settled {_num(result.final_truth.c_true)} %")
    return EXIT_OK


def _sweep_rows(rows):
    return [[r.cutoff_s, r.exponential_error, r.recorded_error, r.reduction, r.n_ok, r.n_failed] for r in rows]


def _bench_rows(rows):
    return [[r.technique, r.mean_abs_error_n, r.mean_percent_error, r.n_ok, r.n_failed] for r in rows]


def _corpus_params(args):
    spec = CorpusSpec(repeats=args.repeats)
    return spec, _sim_params(args)


def cmd_sweep_cutoff(args) -> int:
    spec, params = _corpus_params(args)
    rows = run_cutoff_sweep(spec, args.cutoffs, params, args.seed, args.reference, args.t_a)
    if args.out:
        write_sweep(args.out, rows)
    _print_results("sweep", [[repr(v) if isinstance(v, float) else v for v in r] for r in _sweep_rows(rows)], args.format)
    return EXIT_OK


def cmd_bench_force(args) -> int:
    spec, params = _corpus_params(args)
    rows = run_force_benchmark(spec, params, args.seed, args.t_a)
    if args.out:
        write_bench(args.out, rows)
    _print_results("bench", [[repr(v) if isinstance(v, float) else v for v in r] for r in _bench_rows(rows)], args.format)
    return EXIT_OK


def _display(kind: str, record: List[str]) -> List[str]:
    if kind == "sweep":
        cutoff, fit, raw, reduction, ok, failed = record
        return [f"{float(cutoff):g}", _num(float(fit), 3), _num(float(raw), 3),
                f"{100 * float(reduction):.1f}%" if math.isfinite(float(reduction)) else "nan", ok, failed]
    technique, err_n, err_pct, ok, failed = record
    return [technique, _num(float(err_n), 3), f"{float(err_pct):.1f}%", ok, failed]


def _print_results(kind: str, records: List[List[str]], fmt: str):
    fields = RESULT_KINDS[kind]
    if fmt == "csv":
        sys.stdout.write(csv_block(fields, records))
        return
    if kind == "sweep":
        banner("CUTOFF SWEEP: settled-value error by cutoff time")
        headers = ["cutoff (s)", "exponential (%)", "recorded (%)", "reduction", "fits", "failed"]
    else:
        banner("FORCE BENCHMARK: mean force error by technique")
        headers = ["technique", "error (N)", "error (%)", "n", "failed"]
    if not records:
        print("no rows")
        return
    print(text_table(headers, [_display(kind, [str(v) for v in r]) for r in records]))
    print()
    sys.stdout.write(csv_block(fields, records))


def cmd_report(args) -> int:
    kind, records = read_results(args.results, args.kind)
    if not records:
        print("no rows")
        return EXIT_OK
    fields = RESULT_KINDS[kind]
    _print_results(kind, [[r[f] for f in fields] for r in records], args.format)
    return EXIT_OK


def cmd_ripeness(args) -> int:
    sessions = sorted((read_session(p) for p in args.sessions), key=lambda s: s.day_index)
    trend = ripeness_trend(sessions, args.s_min)
    if args.format == "csv":
        sys.stdout.write(csv_block(["slope_pct_per_day", "direction", "n_sessions"],
                                   [[repr(trend.slope), trend.direction, trend.n_sessions]]))
    else:
        banner("RIPENESS TREND")
        for s in sessions:
            print(f"  day {s.day_index:>3}  {s.session_id:<16} mean C* {_num(s.mean)} %  ({s.n_trials} trials)")
        print(f"\n  slope {_num(trend.slope)} %/day -> {trend.direction}")
    return EXIT_OK


def cmd_bruise(args) -> int:
    reference = read_session(args.reference)
    observed = read_session(args.observed)
    damaged = read_session(args.damaged) if args.damaged else None
    verdict = detect_bruise(reference, observed, args.policy, damaged)
    if args.format == "csv":
        sys.stdout.write(csv_block(
            ["verdict", "reference_mean", "observed_mean", "threshold", "margin", "policy"],
            [[verdict.verdict, repr(verdict.reference_mean), repr(verdict.observed_mean),
              repr(verdict.threshold), repr(verdict.margin), verdict.policy]]))
    else:
        banner("BRUISE CHECK")
        print(f"  reference mean {_num(verdict.reference_mean)} %")
        print(f"  observed mean  {_num(verdict.observed_mean)} %")
        print(f"  threshold      {_num(verdict.threshold)} %  ({verdict.policy})")
        marker = "✗ ANOMALOUS" if verdict.verdict == "anomalous" else "✓ nominal"
        print(f"\n  {marker} (margin {_num(verdict.margin)} %)")
    return EXIT_OK


def cmd_monitor(args) -> int:
    trace = load_trace(args.frames, args.profile)
    cfg = ContactConfig(args.epsilon, args.scope)
    updates = list(monitor_presence(split_windows(trace, args.window), cfg))
    if args.out:
        write_presence_log(args.out, updates)
    rows = [[u.index, f"{u.t_start:.3f}", u.state, _num(u.settled), u.event or ""] for u in updates]
    if args.format == "csv":
        sys.stdout.write(csv_block(["window", "t_start", "state", "settled_pct", "event"], rows))
    else:
        banner("PRESENCE MONITOR")
        print(text_table(["window", "t_start", "state", "settled (%)", "event"], rows))
        removed = sum(1 for u in updates if u.event)
        print(f"\n  {removed} removal event(s)")
    return EXIT_OK


# Parser

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = ToolkitArgumentParser(prog="tactile", description="Piezoresistive tactile sensing toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=ToolkitArgumentParser)
    sub.required = True

    def common(p, seed=False, fit=False, contact=False, sensor=False):
        p.add_argument("--format", choices=["text", "csv"], default="text", help="Output format")
        if sensor:
            defaults = SimSensorParams()
            p.add_argument("--noise", type=float, default=defaults.noise_sigma, help="Per-pixel noise (%%)")
            p.add_argument("--spike-gain", dest="spike_gain", type=float, default=defaults.spike_gain,
                           help="Actuation spike per newton (%%/N)")
            p.add_argument("--quantize", action=argparse.BooleanOptionalAction, default=defaults.quantize_10bit,
                           help="Round simulated ADC counts to integers")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="Simulator seed")
        if fit:
            p.add_argument("--t-c", dest="t_c", type=float, default=DEFAULT_T_C, help="Cutoff after actuation (s)")
            p.add_argument("--t-a", dest="t_a", type=float, default=DEFAULT_T_A, help="Guard after the peak (s)")
        if contact:
            p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="Contact threshold (%%)")
            p.add_argument("--scope", choices=[SCOPE_AGGREGATE, SCOPE_ANY_PIXEL], default=SCOPE_AGGREGATE)

    p = sub.add_parser("fit", help="Fit the grasp transient of frame logs")
    p.add_argument("frames", nargs="+", help="Frame log CSV(s)")
    p.add_argument("--profile", help="Calibration profile (default: baseline from the first quiet frames)")
    p.add_argument("--t-actuation", dest="t_actuation", type=float, help="Actuation time (default: last close_stop mark)")
    p.add_argument("--out", help="Fit-result CSV")
    p.add_argument("--plot", help="Plot-data CSV (t_s, observed, fitted)")
    p.add_argument("--session-id", dest="session_id", help="Write --out as a session file with this id")
    p.add_argument("--day-index", dest="day_index", type=int)
    p.add_argument("--grasp-width", dest="grasp_width", type=float)
    p.add_argument("--notes", default="")
    common(p, fit=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("calibrate", help="Build or extend a calibration profile")
    p.add_argument("--frames", help="Pressure-free capture for the baseline")
    p.add_argument("--profile", help="Existing profile to extend")
    p.add_argument("--n-quiet", dest="n_quiet", type=int, default=15)
    p.add_argument("--force-points", dest="force_points", help="CSV c_star_pct,value (newtons)")
    p.add_argument("--material", help="Name for the fitted force model")
    p.add_argument("--stiffness-points", dest="stiffness_points", help="CSV c_star_pct,value (N/mm)")
    p.add_argument("--published", action="store_true", help="Add the published silicone pad force lines")
    p.add_argument("--created-at", dest="created_at", default="", help="Timestamp recorded in the profile")
    p.add_argument("--out", required=True, help="Profile path to write")
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate-force", help="Force (or stiffness) from a settled value")
    p.add_argument("--c-star", dest="c_star", type=float, help="Settled relative resistance (%%)")
    p.add_argument("--frames", help="Frame log to fit instead of --c-star")
    p.add_argument("--profile")
    p.add_argument("--material")
    p.add_argument("--stiffness", action="store_true", help="Use the profile's stiffness model")
    common(p, fit=True)
    p.set_defaults(func=cmd_estimate_force)

    p = sub.add_parser("estimate-size", help="Size estimation (or force-target grasp) on the simulated gripper")
    p.add_argument("--diameter", type=float, default=35.0)
    p.add_argument("--stiffness", type=float, default=2.0, help="Object stiffness (N/mm)")
    p.add_argument("--empty", action="store_true", help="No object in the gripper")
    p.add_argument("--w-start", dest="w_start", type=float, default=50.0)
    p.add_argument("--w-min", dest="w_min", type=float, default=5.0)
    p.add_argument("--delta-w", dest="delta_w", type=float, default=1.0)
    p.add_argument("--secure-extra", dest="secure_extra", type=float, default=DEFAULT_SECURE_EXTRA)
    p.add_argument("--policy", choices=list(SETTLE_POLICIES), default=SETTLE_FIT)
    p.add_argument("--target", type=float, help="Grasp to this force (N) instead of estimating size")
    p.add_argument("--band", type=float, default=0.5)
    p.add_argument("--profile")
    p.add_argument("--material")
    p.add_argument("--events", help="Control event log CSV")
    common(p, seed=True, fit=True, contact=True, sensor=True)
    p.set_defaults(func=cmd_estimate_size)

    p = sub.add_parser("simulate", help="Simulate a grasp and write a frame log")
    p.add_argument("--scenario", help="Scenario file")
    p.add_argument("--diameter", type=float)
    p.add_argument("--stiffness", type=float, default=2.0)
    p.add_argument("--close-width", dest="close_width", type=float)
    p.add_argument("--close-at", dest="close_at", type=float, default=2.0)
    p.add_argument("--duration", type=float)
    p.add_argument("--save-scenario", dest="save_scenario")
    p.add_argument("--out", required=True, help="Frame log to write")
    common(p, seed=True, sensor=True)
    p.set_defaults(func=cmd_simulate)

    for name, func, help_text in (("sweep-cutoff", cmd_sweep_cutoff, "Settled-error vs cutoff experiment"),
                                  ("bench-force", cmd_bench_force, "Force-estimation technique benchmark")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
        p.add_argument("--out", help="Results CSV")
        p.add_argument("--t-a", dest="t_a", type=float, default=DEFAULT_T_A)
        if name == "sweep-cutoff":
            p.add_argument("--cutoffs", type=_float_list, default=list(DEFAULT_CUTOFFS))
            p.add_argument("--reference", choices=[REFERENCE_TRUTH, REFERENCE_RECORDED], default=REFERENCE_TRUTH)
        common(p, seed=True, sensor=True)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="Summarize sweep or bench results")
    p.add_argument("results")
    p.add_argument("--kind", choices=["auto"] + list(RESULT_KINDS), default="auto")
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ripeness", help="Ripeness trend across session files")
    p.add_argument("sessions", nargs="+")
    p.add_argument("--s-min", dest="s_min", type=float, default=DEFAULT_S_MIN)
    common(p)
    p.set_defaults(func=cmd_ripeness)

    p = sub.add_parser("bruise", help="Compare an observed session with a reference")
    p.add_argument("--reference", required=True)
    p.add_argument("--observed", required=True)
    p.add_argument("--damaged", help="Damaged calibration session for the midpoint threshold")
    p.add_argument("--policy", choices=list(BRUISE_POLICIES), default=POLICY_MIDPOINT)
    common(p)
    p.set_defaults(func=cmd_bruise)

    p = sub.add_parser("monitor", help="Object presence per fixed window")
    p.add_argument("frames")
    p.add_argument("--profile")
    p.add_argument("--window", type=float, default=1.0, help="Window length (s)")
    p.add_argument("--out", help="Presence log CSV")
    common(p, contact=True)
    p.set_defaults(func=cmd_monitor)

    return parser


def _report_error(record: dict, code: int) -> int:
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TactileError as e:
        logger.debug("Command failed", exc_info=True)
        return _report_error(e.to_record(), e.exit_code)
    except (UsageError, ValueError) as e:
        return _report_error({"error": "UsageError", "message": str(e), "exit_code": EXIT_USAGE}, EXIT_USAGE)
    except OSError as e:
        return _report_error({"error": type(e).__name__, "message": str(e), "exit_code": EXIT_DATA}, EXIT_DATA)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user.")
        sys.exit(0)
