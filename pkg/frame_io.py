"""
Tactile Toolkit - Frame and result files
CSV readers and writers: frame logs with mark and truth sidecars, fit
results, plot data, session files, control event logs and experiment tables
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from errors import FormatError, OrderError, RangeError
from produce_analysis import SessionRecord
from section_file import fmt_float, write_atomic
from sensor_model import ADC_MAX, MARK_KINDS, Mark, SensorFrame

logger = logging.getLogger(__name__)

FRAME_PREFIX = ("t_s", "finger_id", "r", "c")
MARK_FIELDS = ("t_s", "kind")
TRUTH_FIELDS = ("t_s", "width_mm", "force_n", "c_true_pct", "a_true_pct")
FIT_FIELDS = ("a_star", "lambda_star", "c_star", "rms_residual", "t_p", "t_c")
PLOT_FIELDS = ("t_s", "observed_pct", "fitted_pct")
EVENT_FIELDS = ("step", "width_mm", "c_star_pct", "force_N", "decision")
PRESENCE_FIELDS = ("window", "t_start", "state", "settled_pct", "event")
SWEEP_FIELDS = ("cutoff_s", "exponential_error_pct", "recorded_error_pct", "reduction", "n_ok", "n_failed")
BENCH_FIELDS = ("technique", "mean_abs_error_n", "mean_percent_error", "n_ok", "n_failed")
SESSION_KEYS = ("session_id", "day_index", "grasp_width", "notes")

RESULT_KINDS = {"sweep": SWEEP_FIELDS, "bench": BENCH_FIELDS}


def marks_path(frames_path) -> Path:
    path = Path(frames_path)
    return path.with_name(path.stem + ".marks.csv")


def truth_path(frames_path) -> Path:
    path = Path(frames_path)
    return path.with_name(path.stem + ".truth.csv")


def fmt_value(value) -> str:
    """Full round-trip text for numbers; integral floats print without a fraction"""
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    value = float(value)
    if math.isfinite(value) and value.is_integer() and abs(value) < 2 ** 53:
        return str(int(value))
    return fmt_float(value)


def _csv_text(header: Sequence[str], rows, preamble: Sequence[str] = ()) -> str:
    buffer = io.StringIO()
    for line in preamble:
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_value(v) for v in row])
    return buffer.getvalue()


def _read_rows(path) -> Tuple[List[Tuple[int, List[str]]], List[Tuple[int, str]]]:
    """Data rows with their line numbers, plus leading '#' lines"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}") from None
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e}") from None
    comments, rows = [], []
    lines = text.splitlines()
    for number, line in enumerate(lines, start=1):
        if line.startswith("#") and not rows:
            comments.append((number, line))
        elif line.strip():
            rows.append((number, next(csv.reader([line]))))
    return rows, comments


def _float(text: str, line: int, field: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"Not a number: '{text}'", line, field) from None


def _int(text: str, line: int, field: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"Not an integer: '{text}'", line, field) from None


def _expect_header(rows, expected: Sequence[str], path) -> List[Tuple[int, List[str]]]:
    if not rows:
        raise FormatError(f"{path} has no header row", 1)
    line, header = rows[0]
    if tuple(h.strip() for h in header) != tuple(expected):
        raise FormatError(f"Expected header {','.join(expected)}", line)
    body = rows[1:]
    for number, row in body:
        if len(row) != len(expected):
            raise FormatError(f"Expected {len(expected)} fields, got {len(row)}", number)
    return body


# Frame logs

def parse_marks(path) -> List[Mark]:
    marks: List[Mark] = []
    rows, _ = _read_rows(path)
    for line, (t_text, kind) in _expect_header(rows, MARK_FIELDS, path):
        t = _float(t_text, line, "t_s")
        if not math.isfinite(t):
            raise FormatError(f"Mark time must be finite, got '{t_text.strip()}'", line, "t_s")
        kind = kind.strip()
        if kind not in MARK_KINDS:
            raise FormatError(f"Unknown mark kind '{kind}'", line, "kind")
        if marks and t < marks[-1][0]:
            raise OrderError("Marks not sorted by time", line, "t_s")
        marks.append((t, kind))
    return marks


def parse_frames(path) -> Tuple[List[SensorFrame], List[Mark]]:
    """Read a frame log and its marks sidecar (if present)"""
    rows, _ = _read_rows(path)
    if not rows:
        raise FormatError(f"{path} has no header row", 1)
    line, header = rows[0]
    header = [h.strip() for h in header]
    n_adc = len(header) - len(FRAME_PREFIX)
    expected = list(FRAME_PREFIX) + [f"adc_{i}" for i in range(max(n_adc, 0))]
    if n_adc < 1 or header != expected:
        raise FormatError("Header must be t_s,finger_id,r,c,adc_0,...", line)

    frames: List[SensorFrame] = []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise FormatError(f"Expected {len(header)} fields, got {len(row)}", line)
        t = _float(row[0], line, "t_s")
        if not math.isfinite(t):
            raise FormatError(f"Timestamp must be finite, got '{row[0].strip()}'", line, "t_s")
        rows_n, cols_n = _int(row[2], line, "r"), _int(row[3], line, "c")
        if rows_n * cols_n != n_adc:
            raise FormatError(f"Grid {rows_n}x{cols_n} does not match {n_adc} ADC columns", line, "r")
        counts = []
        for i, text in enumerate(row[len(FRAME_PREFIX):]):
            count = _float(text, line, f"adc_{i}")
            if not (math.isfinite(count) and 0 <= count <= ADC_MAX):
                raise RangeError(f"ADC count {text.strip()} outside [0, {ADC_MAX}]", line, f"adc_{i}")
            counts.append(count)
        if frames and t <= frames[-1].timestamp:
            raise OrderError("Timestamps not strictly increasing", line, "t_s")
        frames.append(SensorFrame(t, rows_n, cols_n, tuple(counts), row[1].strip()))

    sidecar = marks_path(path)
    marks = parse_marks(sidecar) if sidecar.exists() else []
    logger.info("Read %d frames and %d marks from %s", len(frames), len(marks), path)
    return frames, marks


def write_frames(path, frames: Sequence[SensorFrame], marks: Optional[Sequence[Mark]] = None):
    """Write a frame log; marks (when given) go to the sidecar"""
    if not frames:
        raise FormatError("No frames to write")
    n = frames[0].rows * frames[0].cols
    header = list(FRAME_PREFIX) + [f"adc_{i}" for i in range(n)]
    rows = ([f.timestamp, f.finger_id, f.rows, f.cols, *f.adc_counts] for f in frames)
    write_atomic(path, _csv_text(header, rows))
    if marks is not None:
        write_atomic(marks_path(path), _csv_text(MARK_FIELDS, ([t, k] for t, k in marks)))


def write_truth(path, truth):
    rows = ([r.t_s, r.width_mm, r.force_n, r.c_true, r.a_true] for r in truth)
    write_atomic(path, _csv_text(TRUTH_FIELDS, rows))


def read_truth(path) -> List[Dict[str, float]]:
    rows, _ = _read_rows(path)
    return [
        {name: _float(text, line, name) for name, text in zip(TRUTH_FIELDS, row)}
        for line, row in _expect_header(rows, TRUTH_FIELDS, path)
    ]


# Fit results and sessions

def write_fit_results(path, records: Sequence[Dict[str, float]], header: Optional[Dict[str, object]] = None):
    preamble = [f"# {key} = {fmt_value(value)}" for key, value in (header or {}).items()]
    rows = ([record.get(name, math.nan) for name in FIT_FIELDS] for record in records)
    write_atomic(path, _csv_text(FIT_FIELDS, rows, preamble))


def read_fit_results(path) -> Tuple[Dict[str, str], List[Dict[str, float]]]:
    rows, comments = _read_rows(path)
    header = {}
    for line, text in comments:
        body = text.lstrip("#").strip()
        if not body:
            continue
        if "=" not in body:
            raise FormatError("Header lines must read '# key = value'", line)
        key, value = (part.strip() for part in body.split("=", 1))
        header[key] = value
    records = [
        {name: _float(text, line, name) for name, text in zip(FIT_FIELDS, row)}
        for line, row in _expect_header(rows, FIT_FIELDS, path)
    ]
    return header, records


def write_plot_data(path, times, observed, fitted):
    rows = ([t, o, f] for t, o, f in zip(times, observed, fitted))
    write_atomic(path, _csv_text(PLOT_FIELDS, rows))


def write_session(path, session: SessionRecord, records: Optional[Sequence[Dict[str, float]]] = None):
    """Session header block plus one fit-result row per trial"""
    if records is None:
        records = [{"c_star": c} for c in session.c_stars]
    header = {
        "session_id": session.session_id,
        "day_index": session.day_index,
        "grasp_width": session.grasp_width,
        "notes": session.notes,
    }
    write_fit_results(path, records, header)


def read_session(path) -> SessionRecord:
    header, records = read_fit_results(path)
    for key in ("session_id", "day_index", "grasp_width"):
        if key not in header:
            raise FormatError(f"Session file {path} lacks '# {key} = ...'", 1, key)
    if not records:
        raise FormatError(f"Session file {path} has no trials")
    c_stars = [r["c_star"] for r in records]
    if not all(math.isfinite(c) for c in c_stars):
        raise FormatError(f"Session file {path} has a non-finite c_star", None, "c_star")
    try:
        day = int(header["day_index"])
        width = float(header["grasp_width"])
    except ValueError:
        raise FormatError(f"Bad session header in {path}", 1) from None
    return SessionRecord(header["session_id"], day, tuple(c_stars), width, header.get("notes", ""))


# Control logs and experiment tables

def write_event_log(path, events):
    rows = ([e.step, e.width_mm, e.c_star_pct, e.force_n, e.decision] for e in events)
    write_atomic(path, _csv_text(EVENT_FIELDS, rows))


def write_presence_log(path, updates):
    rows = ([u.index, u.t_start, u.state, u.settled, u.event or ""] for u in updates)
    write_atomic(path, _csv_text(PRESENCE_FIELDS, rows))


def write_sweep(path, rows):
    data = ([r.cutoff_s, r.exponential_error, r.recorded_error, r.reduction, r.n_ok, r.n_failed] for r in rows)
    write_atomic(path, _csv_text(SWEEP_FIELDS, data))


def write_bench(path, rows):
    data = ([r.technique, r.mean_abs_error_n, r.mean_percent_error, r.n_ok, r.n_failed] for r in rows)
    write_atomic(path, _csv_text(BENCH_FIELDS, data))


def read_results(path, kind: str = "auto") -> Tuple[str, List[Dict[str, str]]]:
    """
    Read a sweep or bench table. kind "auto" picks the schema from the header;
    an empty file yields no rows.
    """
    rows, _ = _read_rows(path)
    if not rows:
        return kind, []
    line, header = rows[0]
    header = tuple(h.strip() for h in header)
    if kind == "auto":
        matches = [k for k, fields in RESULT_KINDS.items() if fields == header]
        if not matches:
            raise FormatError("Header matches neither sweep nor bench results", line)
        kind = matches[0]
    if kind not in RESULT_KINDS:
        raise FormatError(f"Unknown result kind '{kind}'")
    fields = RESULT_KINDS[kind]
    body = _expect_header(rows, fields, path)
    records = []
    for number, row in body:
        record = dict(zip(fields, (v.strip() for v in row)))
        for name in fields:
            if name != "technique":
                _float(record[name], number, name)
        records.append(record)
    return kind, records
