import io
import math
import struct

import numpy as np
import pytest

from teleoscale.errors import LogFormatError
from teleoscale.experiment import data_path
from teleoscale.telemetry import (
    LOG_MAGIC,
    TaskMetrics,
    TrajectoryLog,
    TrajectoryRecord,
    aggregate_relative,
    emit_table,
    path_length,
    read_log,
    read_metrics_csv,
    write_metrics_csv,
)

from conftest import random_unit_quat


class TestPathLength:
    def test_unit_segment(self):
        assert path_length([(0, 0, 0), (1, 0, 0)]) == 1.0

    def test_single_point_zero(self):
        assert path_length([(5.0, 1.0, -2.0)]) == 0.0

    def test_matches_pairwise_norm_oracle(self, rng):
        pts = rng.uniform(-3, 3, size=(1000, 3))
        oracle = sum(
            math.sqrt(
                (pts[i, 0] - pts[i - 1, 0]) ** 2
                + (pts[i, 1] - pts[i - 1, 1]) ** 2
                + (pts[i, 2] - pts[i - 1, 2]) ** 2
            )
            for i in range(1, len(pts))
        )
        assert path_length(pts) == pytest.approx(oracle, abs=1e-12)

    def test_non_finite_names_index(self):
        pts = [(0, 0, 0), (1, 0, 0), (math.nan, 0, 0), (2, 0, 0)]
        with pytest.raises(ValueError, match="index 2"):
            path_length(pts)

    def test_invariant_under_rigid_motion(self, rng):
        from conftest import quat_to_matrix_oracle

        pts = rng.uniform(-1, 1, size=(200, 3))
        R = quat_to_matrix_oracle(random_unit_quat(rng))
        moved = pts @ R.T + np.array([0.3, -0.7, 2.0])
        assert path_length(moved) == pytest.approx(path_length(pts), abs=1e-12)

    def test_additive_over_concatenation(self, rng):
        a = rng.uniform(-1, 1, size=(50, 3))
        b = rng.uniform(-1, 1, size=(50, 3))
        b[0] = a[-1]  # shared endpoint
        total = path_length(np.vstack([a, b[1:]]))
        assert total == pytest.approx(path_length(a) + path_length(b), abs=1e-12)


@pytest.fixture(scope="module")
def reference_metrics():
    return read_metrics_csv(data_path("tables/invivo_reference.csv"))


class TestAggregateRelative:
    def test_distance_reduced_vs_normal_six_hand_tasks(self, reference_metrics):
        pct = aggregate_relative(reference_metrics, "normal", "reduced", "distance")
        assert round(pct) == 156

    def test_distance_velocity_vs_normal_eight_hand_tasks(self, reference_metrics):
        pct = aggregate_relative(reference_metrics, "normal", "velocity", "distance")
        assert round(pct) == 61

    def test_time_velocity_vs_normal(self, reference_metrics):
        pct = aggregate_relative(reference_metrics, "normal", "velocity", "time")
        assert round(pct) == 88

    def test_time_reduced_vs_normal_totals(self, reference_metrics):
        pct = aggregate_relative(
            reference_metrics, "normal", "reduced", "time", "ratio_of_totals"
        )
        # (1233 + 759 + 1078) / (694 + 185 + 903), thyroid excluded pairwise
        assert pct == pytest.approx(100.0 * 3070 / 1782, abs=1e-9)
        assert round(pct, 1) == 172.3

    def test_time_reduced_vs_normal_mean(self, reference_metrics):
        pct = aggregate_relative(reference_metrics, "normal", "reduced", "time")
        assert round(pct) == 236

    def test_zero_baseline_rejected(self):
        rows = [
            TaskMetrics("a", "base", 0.0, 1.0),
            TaskMetrics("a", "var", 1.0, 1.0),
        ]
        with pytest.raises(ValueError, match="zero baseline"):
            aggregate_relative(rows, "base", "var", "time")

    def test_no_shared_tasks_rejected(self):
        rows = [
            TaskMetrics("a", "base", 1.0, 1.0),
            TaskMetrics("b", "var", 1.0, 1.0),
        ]
        with pytest.raises(ValueError, match="no shared"):
            aggregate_relative(rows, "base", "var", "time")

    def test_unknown_method_rejected(self, reference_metrics):
        with pytest.raises(ValueError):
            aggregate_relative(reference_metrics, "normal", "reduced", "time", "median")


class TestEmitTable:
    def test_grid_cells_match_fixture(self, reference_metrics):
        text = emit_table(reference_metrics)
        for cell in ("694", "185", "903", "259", "1233", "166", "0.54", "6.45", "2.74"):
            assert cell in text
        assert "---" in text  # thyroid under reduced scaling is missing
        assert "[time_s]" in text and "[dist_left_m]" in text and "[dist_right_m]" in text

    def test_empty_metrics_header_only(self):
        text = emit_table([])
        assert "[time_s]" in text
        assert "config" in text

    def test_csv_round_trips_through_loader(self, reference_metrics):
        csv_text = emit_table(reference_metrics, "csv")
        again = read_metrics_csv(io.StringIO(csv_text))
        assert again == reference_metrics

    def test_write_read_csv_round_trip(self, tmp_path):
        rows = [
            TaskMetrics("t1", "cfg", 12.5, 0.125, 0.25),
            TaskMetrics("t2", "cfg", None, 0.5, None),
        ]
        p = tmp_path / "m.csv"
        write_metrics_csv(rows, p)
        assert read_metrics_csv(p) == rows

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError, match="header"):
            read_metrics_csv(io.StringIO("a,b,c\n1,2,3\n"))


def make_records(rng, n):
    out = []
    for tick in range(n):
        out.append(
            TrajectoryRecord(
                tick=tick,
                master_p=tuple(rng.uniform(-1, 1, size=3)),
                master_q=random_unit_quat(rng),
                target_p=tuple(rng.uniform(-1, 1, size=3)),
                target_q=random_unit_quat(rng),
                actual_p=tuple(rng.uniform(-1, 1, size=3)),
                actual_q=random_unit_quat(rng),
                seq=tick if tick % 7 else None,
                clutched=bool(tick % 3 == 0),
                gamma=float(rng.uniform(0.1, 1.0)),
            )
        )
    return out


class TestTrajectoryLogIO:
    def test_10k_round_trip(self, tmp_path, rng):
        records = make_records(rng, 10_000)
        meta = {"config": {"label": "x"}, "note": 1}
        p = tmp_path / "run.tlog"
        with TrajectoryLog(p, meta) as log:
            for r in records:
                log.append(r)
        got_meta, got_records = read_log(p)
        assert got_meta == meta
        assert got_records == records

    def test_truncation_reports_offset(self, tmp_path, rng):
        p = tmp_path / "run.tlog"
        with TrajectoryLog(p, {}) as log:
            for r in make_records(rng, 5):
                log.append(r)
        data = p.read_bytes()
        cut = p.with_suffix(".cut")
        cut.write_bytes(data[:-7])
        with pytest.raises(LogFormatError, match=r"byte \d+"):
            read_log(cut)

    def test_version_mismatch_named(self, tmp_path):
        p = tmp_path / "bad.tlog"
        p.write_bytes(b"TLOG9" + struct.pack("<I", 2) + b"{}")
        with pytest.raises(LogFormatError, match="version"):
            read_log(p)

    def test_bad_magic_named(self, tmp_path):
        p = tmp_path / "bad.tlog"
        p.write_bytes(b"NOPE!" + struct.pack("<I", 2) + b"{}")
        with pytest.raises(LogFormatError, match="magic"):
            read_log(p)

    def test_record_corruption_detected(self, tmp_path, rng):
        p = tmp_path / "run.tlog"
        with TrajectoryLog(p, {}) as log:
            for r in make_records(rng, 3):
                log.append(r)
        data = bytearray(p.read_bytes())
        data[60] ^= 0xFF  # inside the first record body
        p.write_bytes(bytes(data))
        with pytest.raises(LogFormatError, match="crc|metadata"):
            read_log(p)

    def test_out_of_order_ticks_refused(self, tmp_path, rng):
        p = tmp_path / "run.tlog"
        with TrajectoryLog(p, {}) as log:
            recs = make_records(rng, 2)
            log.append(recs[1])
            with pytest.raises(ValueError, match="tick-ordered"):
                log.append(recs[0])

    def test_magic_constant(self):
        assert LOG_MAGIC == b"TLOG1"
