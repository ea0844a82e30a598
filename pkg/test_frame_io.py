"""Tests for frame logs, sidecars and result tables"""

import math

import pytest

from errors import FormatError, OrderError, RangeError
from frame_io import (
    marks_path,
    parse_frames,
    read_fit_results,
    read_results,
    read_session,
    read_truth,
    truth_path,
    write_bench,
    write_fit_results,
    write_frames,
    write_session,
    write_sweep,
    write_truth,
)
from produce_analysis import SessionRecord
from sensor_model import build_trace
from sensor_simulator import BenchRow, SimObject, SimSensorParams, SweepRow, simulate_grasp

HEADER = "t_s,finger_id,r,c,adc_0,adc_1\n"


class TestParseFrames:
    def test_minimal_file(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(HEADER + "0.0,0,1,2,512,600\n")
        frames, marks = parse_frames(path)
        assert len(frames) == 1
        assert frames[0].adc_counts == (512.0, 600.0)
        assert marks == []

    def test_count_out_of_range(self, tmp_path):
        path = tmp_path / "range.csv"
        path.write_text(HEADER + "0.0,0,1,2,512,600\n0.1,0,1,2,1100,600\n")
        with pytest.raises(RangeError) as info:
            parse_frames(path)
        assert info.value.line == 3
        assert info.value.field == "adc_0"

    def test_out_of_order(self, tmp_path):
        path = tmp_path / "order.csv"
        path.write_text(HEADER + "0.2,0,1,2,512,600\n0.1,0,1,2,512,600\n")
        with pytest.raises(OrderError) as info:
            parse_frames(path)
        assert info.value.line == 3

    def test_bad_header(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("time,adc\n0.0,512\n")
        with pytest.raises(FormatError) as info:
            parse_frames(path)
        assert info.value.line == 1

    def test_grid_must_match_columns(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text(HEADER + "0.0,0,2,2,512,600\n")
        with pytest.raises(FormatError):
            parse_frames(path)

    def test_marks_sidecar(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text(HEADER + "0.0,0,1,2,512,600\n")
        marks_path(path).write_text("t_s,kind\n0.0,close_start\n0.0,close_stop\n")
        _, marks = parse_frames(path)
        assert marks == [(0.0, "close_start"), (0.0, "close_stop")]

    def test_unknown_mark_kind(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text(HEADER + "0.0,0,1,2,512,600\n")
        marks_path(path).write_text("t_s,kind\n0.0,squeeze\n")
        with pytest.raises(FormatError) as info:
            parse_frames(path)
        assert info.value.field == "kind"

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite_timestamp(self, tmp_path, bad):
        path = tmp_path / "log.csv"
        path.write_text(HEADER + f"0.0,0,1,2,512,600\n{bad},0,1,2,512,600\n0.2,0,1,2,512,600\n")
        with pytest.raises(FormatError) as info:
            parse_frames(path)
        assert info.value.line == 3
        assert info.value.field == "t_s"

    def test_non_finite_mark_time(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text(HEADER + "0.0,0,1,2,512,600\n")
        marks_path(path).write_text("t_s,kind\nnan,close_stop\n")
        with pytest.raises(FormatError) as info:
            parse_frames(path)
        assert info.value.field == "t_s"

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "binary.csv"
        path.write_bytes(HEADER.encode() + b"0.0,0,1,2,512,\xff600\n")
        with pytest.raises(FormatError) as info:
            parse_frames(path)
        assert "not UTF-8" in str(info.value)


class TestSimulatorLogs:
    def test_written_log_reads_back_identically(self, tmp_path):
        result = simulate_grasp(SimObject(35.0, 2.0), [(0.0, 40.0), (2.0, 33.0)], SimSensorParams(), seed=4,
                                duration=6.0)
        path = tmp_path / "grasp.csv"
        write_frames(path, result.frames, result.marks)
        write_truth(truth_path(path), result.truth)
        frames, marks = parse_frames(path)
        assert tuple(frames) == result.frames
        assert tuple(marks) == result.marks
        build_trace(frames, result.baseline(), result.params.divider, marks)
        truth = read_truth(truth_path(path))
        assert truth[-1]["force_n"] == pytest.approx(result.final_truth.force_n)
        assert truth[-1]["c_true_pct"] == pytest.approx(result.final_truth.c_true)


class TestFitResults:
    def test_header_block_and_records(self, tmp_path):
        path = tmp_path / "fit.csv"
        record = {"a_star": 40.0, "lambda_star": 0.2, "c_star": -30.125, "rms_residual": 0.0, "t_p": 2.0, "t_c": 2.5}
        write_fit_results(path, [record], {"source": "bench"})
        header, records = read_fit_results(path)
        assert header == {"source": "bench"}
        assert records == [record]

    def test_session_round_trip(self, tmp_path):
        path = tmp_path / "day3.csv"
        session = SessionRecord("avocado-3", 3, (-20.5, -21.25, -19.75), 33.0, "left finger")
        write_session(path, session)
        assert read_session(path) == session

    def test_session_needs_header(self, tmp_path):
        path = tmp_path / "plain.csv"
        write_fit_results(path, [{"c_star": -20.0}])
        with pytest.raises(FormatError):
            read_session(path)


class TestResultTables:
    def test_sweep_detected(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_sweep(path, [SweepRow(2.5, 0.4, 3.2, 0.875, 200, 0)])
        kind, rows = read_results(path)
        assert kind == "sweep"
        assert float(rows[0]["reduction"]) == pytest.approx(0.875)

    def test_bench_detected(self, tmp_path):
        path = tmp_path / "bench.csv"
        write_bench(path, [BenchRow("raw@2.5s", 1.3, 25.0, 200, 0), BenchRow("exponential@2.5s", math.nan, math.nan, 0, 200)])
        kind, rows = read_results(path)
        assert kind == "bench"
        assert [r["technique"] for r in rows] == ["raw@2.5s", "exponential@2.5s"]

    def test_empty_file_has_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert read_results(path)[1] == []

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_results(path)
