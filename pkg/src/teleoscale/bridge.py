"""Live operator bridge: a WebSocket session speaking the binary wire format.

The browser (or any client) is the master console: it runs input capture and
the scaling controller, and streams real telecommands as binary WebSocket
frames.  This server owns everything past the console: the delayed command
channel, the follower, the task tracker, the delayed feedback channel and
telemetry.  Feedback frames reach the client only after the configured
one-way delay, so the rendered follower lag is honest.

Plain HTTP on the same port:

    GET /session/config        active config as JSON
    GET /session/<id>/metrics  TaskMetrics for a live or finished session

Text frames carry JSON control/status messages; malformed client frames are
rejected per frame without ending the session.  One operator at a time.
"""

from __future__ import annotations

import http
import json
import queue
import threading
import time
from pathlib import Path

from .channel import FeedbackMsg, SimChannel
from .errors import WireDecodeError
from .experiment import ExperimentConfig, metrics_from_records
from .follower import FollowerStation, TaskTracker
from .kinematics import Pose
from .scaling import Telecommand
from .telemetry import TrajectoryLog, TrajectoryRecord
from .wire import deserialize, serialize

WS_PATH = "/session/ws"


def _metrics_doc(m) -> dict:
    return {
        "task": m.task_name,
        "config": m.config_label,
        "time_s": m.completion_time_s,
        "dist_left_m": m.path_length_left_m,
        "dist_right_m": m.path_length_right_m,
    }


class _Session:
    """One operator connection: tick loop, channels, follower, log."""

    def __init__(self, session_id: str, config: ExperimentConfig,
                 conn, send_lock: threading.Lock, log_path: Path | None,
                 feedback_every: int, status_every: int):
        self.id = session_id
        self.config = config
        self.conn = conn
        self.send_lock = send_lock
        self.inputs: queue.SimpleQueue = queue.SimpleQueue()
        self.records: list[TrajectoryRecord] = []
        self.records_lock = threading.Lock()
        self.events: list[dict] = []
        self.gamma_echo = config.scaling.gamma_c
        self.scaling_label = config.label
        self.stop = threading.Event()
        self.feedback_every = feedback_every
        self.status_every = status_every
        self.log = (
            TrajectoryLog(log_path, {"config": config.to_dict(), "bridge_session": True,
                                     "log_schema": 1})
            if log_path is not None
            else None
        )
        self.thread = threading.Thread(target=self._loop, daemon=True)

    def metrics(self):
        with self.records_lock:
            records = list(self.records)
        if not records:
            return None
        return metrics_from_records(records, self.config.task, self.config.tick_hz,
                                    self.config.label)

    def _send_json(self, doc: dict) -> None:
        try:
            with self.send_lock:
                self.conn.send(json.dumps(doc))
        except Exception:
            self.stop.set()

    def _send_binary(self, data: bytes) -> None:
        try:
            with self.send_lock:
                self.conn.send(data)
        except Exception:
            self.stop.set()

    def _loop(self) -> None:
        cfg = self.config
        follower = FollowerStation(
            initial_pose=Pose(cfg.task.start),
            alignment=cfg.alignment,
            max_linear_rate=cfg.max_linear_rate,
            max_angular_rate=cfg.max_angular_rate,
            dt=cfg.dt,
        )
        cmd_channel = SimChannel(cfg.command_channel)
        fb_channel = SimChannel(cfg.fb_channel())
        tracker = TaskTracker(cfg.task)
        announced_done = False
        tick = 0
        fb_seq = 0
        t0 = time.monotonic()
        try:
            while not self.stop.is_set():
                target_tick = int((time.monotonic() - t0) * cfg.tick_hz)
                if target_tick <= tick:
                    time.sleep(0.0005)
                    continue
                # cap catch-up so a stall cannot freeze the loop for long
                target_tick = min(target_tick, tick + 5000)
                while tick < target_tick and not self.stop.is_set():
                    while True:
                        try:
                            cmd = self.inputs.get_nowait()
                        except queue.Empty:
                            break
                        cmd_channel.send(cmd, tick)
                    applied_seq = None
                    clutched = False
                    for cmd in cmd_channel.poll(tick):
                        if follower.apply_telecommand(cmd):
                            applied_seq = cmd.seq
                            clutched = cmd.clutched
                    follower.regulate()
                    tracker.update(follower.actual_position, tick)
                    if tick % self.feedback_every == 0:
                        fb = FeedbackMsg(
                            seq=fb_seq,
                            send_tick=tick,
                            position=follower.actual_position,
                            orientation=follower.actual_pose.orientation,
                            frame_id=tick,
                        )
                        fb_seq += 1
                        fb_channel.send(fb, tick)
                    for fb in fb_channel.poll(tick):
                        self._send_binary(serialize(fb))
                    record = TrajectoryRecord(
                        tick=tick,
                        master_p=follower.target_position,  # commanded mirror
                        master_q=follower.target_pose.orientation,
                        target_p=follower.target_position,
                        target_q=follower.target_pose.orientation,
                        actual_p=follower.actual_position,
                        actual_q=follower.actual_pose.orientation,
                        seq=applied_seq,
                        clutched=clutched,
                        gamma=self.gamma_echo,
                    )
                    with self.records_lock:
                        self.records.append(record)
                    if self.log is not None:
                        self.log.append(record)
                    if tracker.done and not announced_done:
                        announced_done = True
                        self._send_json(
                            {
                                "type": "task",
                                "done": True,
                                "completion_tick": tracker.completed_tick,
                                "session": self.id,
                            }
                        )
                    if tick % self.status_every == 0:
                        self._send_json(
                            {
                                "type": "status",
                                "session": self.id,
                                "tick": tick,
                                "label": self.scaling_label,
                                "gamma": self.gamma_echo,
                                "delay_ticks": cfg.command_channel.one_way_delay_ticks,
                                "tick_hz": cfg.tick_hz,
                                "task_index": tracker.active_index,
                                "task_done": tracker.done,
                            }
                        )
                    tick += 1
        finally:
            if self.log is not None:
                self.log.close()

    def handle_text(self, text: str) -> None:
        try:
            doc = json.loads(text)
            kind = doc["type"]
        except (json.JSONDecodeError, KeyError, TypeError):
            self._send_json({"type": "error", "detail": "malformed control frame"})
            return
        if kind == "gamma":
            try:
                self.gamma_echo = float(doc["value"])
            except (KeyError, TypeError, ValueError):
                self._send_json({"type": "error", "detail": "bad gamma value"})
        elif kind == "scaling":
            label = str(doc.get("label", ""))
            self.scaling_label = label
            self.events.append({"type": "scaling", "label": label})
        elif kind == "ping":
            self._send_json({"type": "pong", "t": doc.get("t")})
        else:
            self._send_json({"type": "error", "detail": f"unknown control type {kind!r}"})

    def handle_binary(self, data: bytes) -> None:
        try:
            msg = deserialize(bytes(data))
        except WireDecodeError as exc:
            self._send_json({"type": "error", "detail": str(exc)})
            return
        except ValueError as exc:
            self._send_json({"type": "error", "detail": f"invalid message: {exc}"})
            return
        if not isinstance(msg, Telecommand):
            self._send_json({"type": "error", "detail": "expected a telecommand frame"})
            return
        self.inputs.put(msg)


class TeleopBridge:
    """WebSocket bridge server; one operator session at a time."""

    def __init__(self, config: ExperimentConfig, listen: str = "127.0.0.1:8765",
                 out_dir: str | Path | None = None, feedback_every: int | None = None,
                 status_every: int | None = None):
        try:
            from websockets.sync.server import serve
        except ImportError as exc:  # pragma: no cover
            raise RuntimeError(
                "the bridge needs the 'websockets' package (pip install teleoscale[bridge])"
            ) from exc
        from teleoscale.transport import parse_address

        self.config = config
        self.host, self.port = parse_address(listen)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        self.feedback_every = feedback_every or max(1, config.tick_hz // 125)
        self.status_every = status_every or max(1, config.tick_hz // 10)
        self._serve = serve
        self._lock = threading.Lock()
        self._active: _Session | None = None
        self._finished: dict[str, object] = {}
        self._counter = 0
        self._server = None
        self._thread: threading.Thread | None = None

    # -- HTTP ---------------------------------------------------------------

    def _process_request(self, connection, request):
        path = request.path.split("?", 1)[0]
        if path == WS_PATH:
            return None  # proceed with the WebSocket handshake
        if path == "/session/config":
            body = json.dumps(self.config.to_dict())
            return connection.respond(http.HTTPStatus.OK, body + "\n")
        if path.startswith("/session/") and path.endswith("/metrics"):
            sid = path[len("/session/"):-len("/metrics")]
            metrics = self._metrics_for(sid)
            if metrics is None:
                return connection.respond(http.HTTPStatus.NOT_FOUND, "no such session\n")
            return connection.respond(http.HTTPStatus.OK, json.dumps(_metrics_doc(metrics)) + "\n")
        if path == "/":
            return connection.respond(
                http.HTTPStatus.OK,
                f"teleoscale bridge; connect a WebSocket to {WS_PATH}\n",
            )
        return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")

    def _metrics_for(self, sid: str):
        with self._lock:
            if self._active is not None and self._active.id == sid:
                return self._active.metrics()
            return self._finished.get(sid)

    # -- WebSocket ----------------------------------------------------------

    def _handler(self, conn):
        with self._lock:
            if self._active is not None:
                conn.close(code=1013, reason="an operator session is already active")
                return
            self._counter += 1
            sid = f"s{self._counter}"
            log_path = (
                self.out_dir / f"session_{sid}.tlog" if self.out_dir is not None else None
            )
            session = _Session(
                sid,
                self.config,
                conn,
                threading.Lock(),
                log_path,
                self.feedback_every,
                self.status_every,
            )
            self._active = session
        session._send_json({"type": "hello", "session": sid, "log": str(log_path or "")})
        session.thread.start()
        try:
            for message in conn:
                if isinstance(message, bytes):
                    session.handle_binary(message)
                else:
                    session.handle_text(message)
        except Exception:
            pass
        finally:
            session.stop.set()
            session.thread.join(timeout=5.0)
            metrics = session.metrics()
            with self._lock:
                if metrics is not None:
                    self._finished[sid] = metrics
                self._active = None

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._server = self._serve(
            self._handler, self.host, self.port, process_request=self._process_request
        )
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()


def serve_bridge(config: ExperimentConfig, listen: str = "127.0.0.1:8765",
                 out_dir: str | Path | None = "teleoscale-out", block: bool = True):
    """Start the bridge; with block=True runs until interrupted."""
    bridge = TeleopBridge(config, listen, out_dir)
    bridge.start()
    print(f"bridge listening on ws://{bridge.address}{WS_PATH}")
    if block:
        try:
            while True:
                time.sleep(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            bridge.stop()
    return bridge
