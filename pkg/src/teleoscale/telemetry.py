"""Per-tick recording, task metrics, aggregation and table rendering.

Log files are append-only binary: a `TLOG1` magic, a JSON metadata blob
(length-prefixed), then length-prefixed CRC-protected records.  Metrics
exports use CSV with the header ``task,config,time_s,dist_left_m,dist_right_m``;
missing cells are empty in CSV and rendered as ``---`` in text tables.
"""

from __future__ import annotations

import csv
import io
import json
import struct
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import LogFormatError

LOG_MAGIC = b"TLOG1"
_REC_FMT = "<QQBd" + "d" * 21  # tick, seq, flags, gamma, 3 poses (3+4 each)
_REC_SIZE = struct.calcsize(_REC_FMT)
_NO_SEQ = 0xFFFFFFFFFFFFFFFF

METRICS_HEADER = ["task", "config", "time_s", "dist_left_m", "dist_right_m"]


def path_length(positions) -> float:
    """Sum of Euclidean segment lengths; a single point has length zero.

    Raises ValueError naming the first non-finite sample.
    """
    pts = np.asarray(positions, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[0] == 0:
        raise ValueError("path_length needs at least one point")
    if pts.shape[1] != 3:
        raise ValueError("positions must be 3-vectors")
    bad = ~np.isfinite(pts).all(axis=1)
    if bad.any():
        raise ValueError(f"non-finite position at index {int(np.argmax(bad))}")
    return float(kernels.path_length(pts))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One tick of the loop: master pose, follower target/actual, command."""

    tick: int
    master_p: tuple[float, float, float]
    master_q: tuple[float, float, float, float]
    target_p: tuple[float, float, float]
    target_q: tuple[float, float, float, float]
    actual_p: tuple[float, float, float]
    actual_q: tuple[float, float, float, float]
    seq: int | None = None
    clutched: bool = False
    gamma: float = 1.0

    def pack(self) -> bytes:
        body = struct.pack(
            _REC_FMT,
            self.tick,
            _NO_SEQ if self.seq is None else self.seq,
            1 if self.clutched else 0,
            self.gamma,
            *self.master_p,
            *self.master_q,
            *self.target_p,
            *self.target_q,
            *self.actual_p,
            *self.actual_q,
        )
        return body

    @staticmethod
    def unpack(body: bytes) -> "TrajectoryRecord":
        v = struct.unpack(_REC_FMT, body)
        seq = None if v[1] == _NO_SEQ else v[1]
        return TrajectoryRecord(
            tick=v[0],
            seq=seq,
            clutched=bool(v[2] & 1),
            gamma=v[3],
            master_p=v[4:7],
            master_q=v[7:11],
            target_p=v[11:14],
            target_q=v[14:18],
            actual_p=v[18:21],
            actual_q=v[21:25],
        )


class TrajectoryLog:
    """Append-only binary log writer; safe for two producing threads."""

    def __init__(self, path: str | Path, meta: dict):
        self.path = Path(path)
        self._fh = open(self.path, "wb")
        self._lock = threading.Lock()
        self._last_tick = -1
        blob = json.dumps(meta, sort_keys=True).encode()
        self._fh.write(LOG_MAGIC)
        self._fh.write(struct.pack("<I", len(blob)))
        self._fh.write(blob)

    def append(self, record: TrajectoryRecord) -> None:
        body = record.pack()
        frame = struct.pack("<I", len(body)) + body
        frame += struct.pack("<I", zlib.crc32(body))
        with self._lock:
            if record.tick <= self._last_tick:
                raise ValueError(
                    f"records must be tick-ordered: {record.tick} after {self._last_tick}"
                )
            self._last_tick = record.tick
            self._fh.write(frame)

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_log(path: str | Path):
    """Load (meta, records) from a log file.

    Raises LogFormatError naming the byte offset on truncation or corruption.
    """
    data = Path(path).read_bytes()
    if len(data) < len(LOG_MAGIC) + 4:
        raise LogFormatError(f"truncated header at byte {len(data)}")
    if data[:4] == LOG_MAGIC[:4] and data[: len(LOG_MAGIC)] != LOG_MAGIC:
        raise LogFormatError(
            f"unsupported log version {data[:len(LOG_MAGIC)]!r}, expected {LOG_MAGIC!r}"
        )
    if data[: len(LOG_MAGIC)] != LOG_MAGIC:
        raise LogFormatError(f"bad log magic {data[:len(LOG_MAGIC)]!r}")
    off = len(LOG_MAGIC)
    (meta_len,) = struct.unpack_from("<I", data, off)
    off += 4
    if off + meta_len > len(data):
        raise LogFormatError(f"truncated metadata at byte {off}")
    try:
        meta = json.loads(data[off : off + meta_len])
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"unreadable metadata at byte {off}: {exc}") from exc
    off += meta_len
    records = []
    while off < len(data):
        if off + 4 > len(data):
            raise LogFormatError(f"truncated record length at byte {off}")
        (body_len,) = struct.unpack_from("<I", data, off)
        if off + 4 + body_len + 4 > len(data):
            raise LogFormatError(f"truncated record at byte {off}")
        body = data[off + 4 : off + 4 + body_len]
        (crc,) = struct.unpack_from("<I", data, off + 4 + body_len)
        if zlib.crc32(body) != crc:
            raise LogFormatError(f"record crc mismatch at byte {off}")
        if body_len != _REC_SIZE:
            raise LogFormatError(f"unexpected record size {body_len} at byte {off}")
        records.append(TrajectoryRecord.unpack(body))
        off += 4 + body_len + 4
    return meta, records


@dataclass(frozen=True)
class TaskMetrics:
    """One table cell group: completion time plus per-hand path lengths.

    None marks a missing cell (incomplete run, or an absent hand).
    """

    task_name: str
    config_label: str
    completion_time_s: float | None
    path_length_left_m: float | None
    path_length_right_m: float | None = None

    def __post_init__(self):
        for v in (self.completion_time_s, self.path_length_left_m, self.path_length_right_m):
            if v is not None and v < 0:
                raise ValueError("metrics must be >= 0")


def write_metrics_csv(metrics, path_or_buf) -> None:
    close = False
    if isinstance(path_or_buf, (str, Path)):
        fh = open(path_or_buf, "w", newline="")
        close = True
    else:
        fh = path_or_buf
    try:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for m in metrics:
            w.writerow(
                [
                    m.task_name,
                    m.config_label,
                    "" if m.completion_time_s is None else repr(m.completion_time_s),
                    "" if m.path_length_left_m is None else repr(m.path_length_left_m),
                    "" if m.path_length_right_m is None else repr(m.path_length_right_m),
                ]
            )
    finally:
        if close:
            fh.close()


def read_metrics_csv(path_or_buf) -> list[TaskMetrics]:
    if isinstance(path_or_buf, (str, Path)):
        text = Path(path_or_buf).read_text()
    else:
        text = path_or_buf.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != METRICS_HEADER:
        raise ValueError(f"metrics CSV must start with header {','.join(METRICS_HEADER)}")
    out = []
    for row in rows[1:]:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise ValueError(f"metrics row needs 5 cells, got {len(row)}: {row}")
        task, config, t, dl, dr = (c.strip() for c in row)
        out.append(
            TaskMetrics(
                task_name=task,
                config_label=config,
                completion_time_s=float(t) if t else None,
                path_length_left_m=float(dl) if dl else None,
                path_length_right_m=float(dr) if dr else None,
            )
        )
    return out


def _cells(metrics, field):
    """(task, hand) -> value map for one config; hand is '' for time."""
    out = {}
    for m in metrics:
        if field == "time":
            out[(m.task_name, "")] = m.completion_time_s
        else:
            out[(m.task_name, "left")] = m.path_length_left_m
            out[(m.task_name, "right")] = m.path_length_right_m
    return out


def aggregate_relative(
    metrics,
    baseline_label: str,
    variant_label: str,
    field: str = "time",
    method: str = "per_task_ratio_mean",
) -> float:
    """Variant relative to baseline, in percent.

    per_task_ratio_mean averages variant/baseline over the shared cells
    (hands count as separate cells for distance); ratio_of_totals divides
    the summed variant cells by the summed baseline cells.  Cells missing
    on either side are excluded pairwise.
    """
    if field not in ("time", "distance"):
        raise ValueError("field must be 'time' or 'distance'")
    if method not in ("per_task_ratio_mean", "ratio_of_totals"):
        raise ValueError(f"unknown aggregation method {method!r}")
    base = _cells([m for m in metrics if m.config_label == baseline_label], field)
    var = _cells([m for m in metrics if m.config_label == variant_label], field)
    pairs = []
    for key, b in base.items():
        v = var.get(key)
        if b is None or v is None:
            continue
        if b == 0:
            raise ValueError(f"zero baseline value for {key}")
        pairs.append((v, b))
    if not pairs:
        raise ValueError(
            f"no shared tasks between {baseline_label!r} and {variant_label!r}"
        )
    if method == "per_task_ratio_mean":
        return 100.0 * sum(v / b for v, b in pairs) / len(pairs)
    return 100.0 * sum(v for v, _ in pairs) / sum(b for _, b in pairs)


def _fmt_cell(value) -> str:
    if value is None:
        return "---"
    return f"{value:.6g}"


def emit_table(metrics, fmt: str = "text") -> str:
    """Render the metrics grid: one block per measure, rows are configs."""
    if fmt == "csv":
        buf = io.StringIO()
        write_metrics_csv(metrics, buf)
        return buf.getvalue()
    if fmt != "text":
        raise ValueError("format must be 'text' or 'csv'")
    tasks: list[str] = []
    configs: list[str] = []
    for m in metrics:
        if m.task_name not in tasks:
            tasks.append(m.task_name)
        if m.config_label not in configs:
            configs.append(m.config_label)
    by_key = {(m.config_label, m.task_name): m for m in metrics}
    blocks = []
    measures = [
        ("time_s", lambda m: m.completion_time_s),
        ("dist_left_m", lambda m: m.path_length_left_m),
        ("dist_right_m", lambda m: m.path_length_right_m),
    ]
    for title, get in measures:
        widths = [max([len("config")] + [len(c) for c in configs])]
        cols = []
        for t in tasks:
            col = [_fmt_cell(get(by_key[(c, t)])) if (c, t) in by_key else "---" for c in configs]
            cols.append(col)
            widths.append(max([len(t)] + [len(v) for v in col]))
        lines = [f"[{title}]"]
        head = "config".ljust(widths[0])
        for i, t in enumerate(tasks):
            head += "  " + t.rjust(widths[i + 1])
        lines.append(head)
        for ci, c in enumerate(configs):
            row = c.ljust(widths[0])
            for ti in range(len(tasks)):
                row += "  " + cols[ti][ci].rjust(widths[ti + 1])
            lines.append(row)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
